//! One round of the referential game, batches of rounds, and the transcript
//! bookkeeping consumed by the protocol analysis.

mod episode;
mod log;
mod transcript;

pub use episode::{play_batch, play_episode, play_scenes, Episode, PlayedEpisode};
pub use log::{append_episode_log, read_episode_log, write_episode_log, EPISODE_LOG_HEADER};
pub use transcript::{accumulate_transcript, Transcript};

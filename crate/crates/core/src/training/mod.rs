//! Joint REINFORCE training of speaker and listener from game reward only.

mod config;
mod reinforce;
mod trainer;

pub use config::{BaselineMode, TrainConfig};
pub use reinforce::{policy_gradient, reinforce_step, Baseline, BatchItem, StepStats};
pub use trainer::{evaluate, play_transcript, read_stats_csv, train, write_stats_csv, EvalPoint, TrainOutcome, TrainStats, STATS_HEADER};

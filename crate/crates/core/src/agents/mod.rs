//! Speaker and listener networks with hand-derived policy gradients.

mod checkpoint;
mod init;
mod listener;
mod speaker;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use init::{init_params, AgentDims, InitScheme};
pub use listener::{ListenerGrads, ListenerParams, ListenerTrace};
pub use speaker::{SpeakerGrads, SpeakerParams, SpeakerTrace};

use serde::{Deserialize, Serialize};

/// How an agent turns its action distribution into an action.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionMode {
    #[default]
    Sampled,
    Greedy,
}

impl ActionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ActionMode::Sampled => "sampled",
            ActionMode::Greedy => "greedy",
        }
    }
}

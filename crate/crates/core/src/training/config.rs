use serde::{Deserialize, Serialize};

use crate::agents::{ActionMode, AgentDims, InitScheme};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMode {
    None,
    RunningMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub iterations: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub baseline: BaselineMode,
    pub baseline_decay: f64,
    /// Starting value of the running-mean baseline.
    pub baseline_init: f64,
    pub eval_interval: usize,
    pub eval_mode: ActionMode,
    /// Action mode for the end-of-training transcript that feeds the
    /// protocol analyses.
    pub transcript_mode: ActionMode,
    /// Vocabulary size V.
    pub vocab_size: usize,
    /// Discriminator hidden width h.
    pub hidden_size: usize,
    pub temperature: f64,
    pub init: InitScheme,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: 0,
            iterations: 3500,
            batch_size: 32,
            learning_rate: 3.0,
            baseline: BaselineMode::RunningMean,
            baseline_decay: 0.99,
            baseline_init: 0.5,
            eval_interval: 100,
            eval_mode: ActionMode::Sampled,
            transcript_mode: ActionMode::Greedy,
            vocab_size: 18,
            hidden_size: 20,
            temperature: 1.0,
            init: InitScheme::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("batch_size", self.batch_size),
            ("eval_interval", self.eval_interval),
            ("vocab_size", self.vocab_size),
            ("hidden_size", self.hidden_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be finite and non-negative".into()));
        }
        if !(0.0..1.0).contains(&self.baseline_decay) {
            return Err(Error::Config("baseline_decay must lie in [0, 1)".into()));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config("temperature must be positive".into()));
        }
        Ok(())
    }

    pub fn dims(&self, dim: usize) -> AgentDims {
        AgentDims {
            dim,
            vocab: self.vocab_size,
            hidden: self.hidden_size,
        }
    }
}

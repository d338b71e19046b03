use serde::{Deserialize, Serialize};

use super::listener::ListenerParams;
use super::speaker::SpeakerParams;
use crate::numerics::{Matrix, RngStream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentDims {
    /// Feature dimension D.
    pub dim: usize,
    /// Vocabulary size V.
    pub vocab: usize,
    /// Discriminator hidden width h.
    pub hidden: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "lowercase")]
pub enum InitScheme {
    Uniform { scale: f64 },
    Gaussian { std: f64 },
    Zeros,
}

impl Default for InitScheme {
    fn default() -> Self {
        InitScheme::Uniform { scale: 0.08 }
    }
}

impl InitScheme {
    fn draw(self, rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
        match self {
            InitScheme::Uniform { scale } => Matrix::from_fn(rows, cols, |_, _| rng.uniform_range(-scale, scale)),
            InitScheme::Gaussian { std } => Matrix::from_fn(rows, cols, |_, _| std * rng.standard_normal()),
            InitScheme::Zeros => Matrix::zeros(rows, cols),
        }
    }

    pub(crate) fn code(self) -> (u8, f64) {
        match self {
            InitScheme::Uniform { scale } => (1, scale),
            InitScheme::Gaussian { std } => (2, std),
            InitScheme::Zeros => (0, 0.0),
        }
    }

    pub(crate) fn from_code(code: u8, param: f64) -> Option<Self> {
        match code {
            0 => Some(InitScheme::Zeros),
            1 => Some(InitScheme::Uniform { scale: param }),
            2 => Some(InitScheme::Gaussian { std: param }),
            _ => None,
        }
    }
}

/// Draws speaker matrices (attribute map, mixer, readout) then the listener
/// map, in that order, from `rng`.
pub fn init_params(dims: AgentDims, scheme: InitScheme, rng: &mut RngStream) -> (SpeakerParams, ListenerParams) {
    assert!(dims.dim > 0 && dims.vocab > 0 && dims.hidden > 0, "dimensions must be positive");
    let speaker = SpeakerParams {
        attribute_map: scheme.draw(dims.dim, dims.vocab, rng),
        pair_mixer: scheme.draw(2, dims.hidden, rng),
        readout: scheme.draw(dims.hidden, 1, rng),
        temperature: 1.0,
    };
    let listener = ListenerParams {
        attribute_map: scheme.draw(dims.dim, dims.vocab, rng),
        temperature: 1.0,
    };
    (speaker, listener)
}

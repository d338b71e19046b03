//! A two-agent referential game.
//!
//! A speaker network sees a (referent, context) pair and emits one symbol
//! from a fixed vocabulary; a listener network sees the two objects in random
//! order plus the symbol and points at one. Both are trained jointly with
//! REINFORCE on communication success alone. The [`analysis`] module audits
//! the resulting protocol for referential consistency and alignment with
//! gold attributes.

pub mod agents;
pub mod analysis;
pub mod cli;
pub mod datasets;
pub mod error;
pub mod game;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};

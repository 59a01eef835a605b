//! Rainfall-runoff sequence modeling: layers, recurrent cells, five model
//! architectures, synthetic watershed data, training with early stopping,
//! and an evaluation suite. Everything is `f64`, single-threaded per model,
//! and deterministic given a seed.

pub mod architectures;
pub mod check;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod layers;
pub mod numerics;
pub mod recurrent;
pub mod training;

pub use error::{Error, Result};

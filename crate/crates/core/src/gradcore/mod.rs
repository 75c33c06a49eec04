//! Minimal reverse-mode autodiff and training utilities.
//!
//! A [`Tape`] records a small op graph (matmul, add-bias, relu, softmax,
//! concat, plus L1 and weighted cross-entropy losses) over dense f64
//! tensors; [`Tape::backward`] fills analytic gradients. [`MlpModel`],
//! [`AdamState`] and [`RobustScaler`] cover everything the surrogates, the
//! RL policy/value networks and the differentiable searches need.

mod adam;
mod mlp;
mod scaler;
mod tape;

pub use adam::AdamState;
pub use mlp::MlpModel;
pub use scaler::RobustScaler;
pub use tape::{NodeId, Tape, Tensor};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GradError {
    #[error("shape mismatch in {op}: {lhs} vs {rhs}")]
    ShapeMismatch {
        op: &'static str,
        lhs: String,
        rhs: String,
    },
    #[error("label {label} out of range for {classes} classes")]
    InvalidLabel { label: usize, classes: usize },
    #[error("backward requires a scalar root, got {rows}x{cols}")]
    NonScalarRoot { rows: usize, cols: usize },
    #[error("robust scaler needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
}

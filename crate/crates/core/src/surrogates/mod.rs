//! Surrogate models over the analytical simulator: dataset generation, the
//! NN-HW performance predictor, the validity classifier, and the two
//! interpolation studies.

mod dataset;
mod metrics;
mod predictor;
mod studies;
mod validnet;

pub use dataset::{
    gen_perf_dataset, gen_validity_dataset, PerfDataset, PerfSample, ValidityDataset,
    ValiditySample,
};
pub use metrics::kendall_tau;
pub use predictor::{train_predictor, PerfPredictor, TrainConfig, TrainLog};
pub use studies::{gradient_interpolation_study, predictor_interpolation_ratio};
pub use validnet::{train_validnet, ValidNet, ValidNetConfig};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurrogateError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("kendall tau needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("sequence lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("validity dataset has a single class")]
    SingleClass,
    #[error("interpolation endpoints must be valid (v) and invalid (i)")]
    BadEndpoints,
    #[error(transparent)]
    Grad(#[from] crate::gradcore::GradError),
}

//! Synthetic feature and travel-time data from three feature-conditioned
//! generative models (linear, exponential, sigmoidal).

mod dataset;
mod model;

pub use dataset::{make_dataset, make_testset, with_intercept, Dataset, TestPoint, TestSet};
pub use model::{
    build_covariance, logistic, GenerativeModel, ModelKind, NoiseFactor, EXPONENTIAL_SIGMA, LINEAR_NOISE_SCALE,
    SIGMOIDAL_SIGMA,
};

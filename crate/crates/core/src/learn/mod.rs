//! Statistical kernels: least squares, residual covariance, conditional and
//! residual scenario generation, k-nearest neighbours, a small ReLU network
//! and L1-regularized logistic regression.

mod cov;
mod knn;
mod logit;
pub mod matrix_serde;
mod mlp;
mod ols;
mod scenarios;

pub use cov::{estimate_cov, CovEstimate, GaussianSampler};
pub use knn::{default_k, fit_knn, KnnModel};
pub use logit::{fit_logit_l1, LogitModel};
pub use mlp::{fit_mlp, numerical_gradient, MlpConfig, MlpModel};
pub use ols::{fit_ols, OlsModel};
pub use scenarios::{
    clamp_to_nominal, draw_conditional, residual_scenarios, sample_conditional_scenarios, ResidualSign,
};

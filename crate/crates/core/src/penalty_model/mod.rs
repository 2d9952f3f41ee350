//! Penalty predictors for the learned-penalty model: the feature projection
//! of a (features, route, customer) triple, service-start risk, early-arrival
//! estimation and training-set assembly.

mod fpf;
mod risk;
mod training;

pub use fpf::{feature_names, project, FpfContext, Prefix, Projected, FPF_EXTRA};
pub use risk::{
    early_covariates, early_impossible, estimate_early_arrival, propagate_risk, EarlyArrival, EarlyInputs,
    EarlyModel, RiskState,
};
pub use training::{
    build_training_set, distinct_routes, fit_early_arrival, uninformed_early, PenaltyTrainingSet, Periods,
    RouteRun, RowSource, LOGIT_LAMBDA, MIN_LOGIT_EXAMPLES, ZERO_RATIO,
};

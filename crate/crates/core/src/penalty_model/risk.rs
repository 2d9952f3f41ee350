use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learn::{CovEstimate, LogitModel};
use crate::problem::{Instance, Route};

/// Service-start risk and early-arrival probability per route position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskState {
    pub xi: Vec<f64>,
    pub early: Vec<f64>,
}

/// Arc covariance lookup by node pairs.
pub(crate) fn arc_cov(inst: &Instance, cov: &CovEstimate, a: (usize, usize), b: (usize, usize)) -> f64 {
    let arcs = inst.arcs();
    cov.covariance(arcs.index(a.0, a.1), arcs.index(b.0, b.1))
}

pub(crate) fn arc_var(inst: &Instance, cov: &CovEstimate, i: usize, j: usize) -> f64 {
    cov.variance(inst.arcs().index(i, j))
}

/// One step of the risk recursion for visiting `j` after `last` (preceded by `prev`).
pub(crate) fn risk_step(
    inst: &Instance,
    cov: &CovEstimate,
    position: usize,
    prev: usize,
    last: usize,
    j: usize,
    xi_last: f64,
    early_j: f64,
) -> f64 {
    let keep = 1.0 - early_j;
    if position == 0 {
        keep * arc_var(inst, cov, 0, j)
    } else {
        keep * (xi_last + arc_var(inst, cov, last, j) + 2.0 * arc_cov(inst, cov, (prev, last), (last, j)))
    }
}

/// Propagates service-start risk along a route given early-arrival probabilities.
pub fn propagate_risk(route: &Route, inst: &Instance, cov: &CovEstimate, early: &[f64]) -> Result<RiskState> {
    if early.len() != route.len() {
        return Err(Error::Dimension(format!(
            "{} probabilities for a route of length {}",
            early.len(),
            route.len()
        )));
    }
    if early.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(Error::Domain("early-arrival probabilities must lie in [0, 1]".into()));
    }
    let mut xi = Vec::with_capacity(route.len());
    let (mut prev, mut last, mut x) = (0usize, 0usize, 0.0);
    for (k, &j) in route.customers().iter().enumerate() {
        x = risk_step(inst, cov, k, prev, last, j, x, early[k]);
        xi.push(x);
        prev = last;
        last = j;
    }
    Ok(RiskState {
        xi,
        early: early.to_vec(),
    })
}

/// Early-arrival predictor of one customer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EarlyModel {
    Logit(LogitModel),
    Frequency { p: f64 },
}

/// Per-customer early-arrival predictors, indexed by node id (entry 0 unused).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EarlyArrival {
    pub models: Vec<EarlyModel>,
}

impl EarlyArrival {
    /// Every customer predicted with the same constant probability.
    pub fn constant(inst: &Instance, p: f64) -> Self {
        Self {
            models: vec![EarlyModel::Frequency { p }; inst.n_nodes()],
        }
    }

    pub fn model_probability(&self, customer: usize, w: &[f64]) -> f64 {
        match &self.models[customer] {
            EarlyModel::Logit(m) => m.probability(w),
            EarlyModel::Frequency { p } => *p,
        }
    }
}

/// Quantities of a route prefix ending at customer `i` that the early-arrival
/// rules and covariates depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EarlyInputs {
    pub customer: usize,
    /// Latest window opening among customers visited before `i` (`None` if `i` is first).
    pub max_prior_ready: Option<f64>,
    /// Transportation cost of the route up to and including the arc into `i`.
    pub cost_to_here: f64,
    pub predicted_arrival: f64,
    pub arc_variance: f64,
}

/// Early-arrival covariates: `x`, `e_i`, predicted arrival, arc variance,
/// latest prior opening, cost so far.
pub fn early_covariates(inst: &Instance, x: &[f64], e: &EarlyInputs) -> Vec<f64> {
    let mut w = Vec::with_capacity(x.len() + 5);
    w.extend_from_slice(x);
    w.push(inst.ready(e.customer));
    w.push(e.predicted_arrival);
    w.push(e.arc_variance);
    w.push(e.max_prior_ready.unwrap_or(0.0));
    w.push(e.cost_to_here);
    w
}

/// True when the customer can never be reached before its window opens.
pub fn early_impossible(inst: &Instance, e: &EarlyInputs) -> bool {
    let ready = inst.ready(e.customer);
    ready == 0.0 || e.cost_to_here > ready || e.max_prior_ready.is_some_and(|m| m > ready)
}

/// Early-arrival probability with the hard-zero rules applied before the model.
pub fn estimate_early_arrival(inst: &Instance, x: &[f64], e: &EarlyInputs, model: &EarlyArrival) -> f64 {
    if early_impossible(inst, e) {
        return 0.0;
    }
    model.model_probability(e.customer, &early_covariates(inst, x, e))
}

use super::risk::{arc_var, estimate_early_arrival, risk_step, EarlyArrival, EarlyInputs};
use crate::error::{Error, Result};
use crate::learn::CovEstimate;
use crate::problem::{Instance, PenaltyFn, Route, TravelTimes};

/// Number of projected predictors beyond the raw feature vector.
pub const FPF_EXTRA: usize = 16;

/// Column names of the projected predictors for `p` raw features.
pub fn feature_names(p: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=p).map(|k| format!("x{k}")).collect();
    for n in [
        "ready", "due", "due_prev", "cost_prev", "var_prev", "position", "arr_nom", "start_nom", "late_nom",
        "pen_nom", "t_hat_prev", "arr_hat", "start_hat", "late_hat", "pen_hat", "risk",
    ] {
        names.push(n.to_string());
    }
    names
}

/// Everything the projection needs besides the route itself.
#[derive(Clone, Copy)]
pub struct FpfContext<'a> {
    pub inst: &'a Instance,
    pub pen: &'a PenaltyFn,
    pub x: &'a [f64],
    pub t_hat: &'a TravelTimes,
    pub cov: &'a CovEstimate,
    pub early: &'a EarlyArrival,
}

/// State of a route prefix, enough to project the next customer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prefix {
    pub last: usize,
    pub prev: usize,
    pub len: usize,
    pub start_nom: f64,
    pub start_hat: f64,
    pub risk: f64,
    pub max_ready: Option<f64>,
    pub cost: f64,
}

impl Prefix {
    pub fn depot() -> Self {
        Self {
            last: 0,
            prev: 0,
            len: 0,
            start_nom: 0.0,
            start_hat: 0.0,
            risk: 0.0,
            max_ready: None,
            cost: 0.0,
        }
    }
}

/// A customer's projected predictors together with its early-arrival estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct Projected {
    pub y: Vec<f64>,
    pub early: f64,
}

impl FpfContext<'_> {
    pub fn n_features(&self) -> usize {
        self.x.len() + FPF_EXTRA
    }

    /// Early-arrival inputs for appending `j` to `prefix`.
    pub fn early_inputs(&self, prefix: &Prefix, j: usize) -> EarlyInputs {
        let inst = self.inst;
        EarlyInputs {
            customer: j,
            max_prior_ready: prefix.max_ready,
            cost_to_here: prefix.cost + inst.cost(prefix.last, j),
            predicted_arrival: prefix.start_hat + self.t_hat.get(prefix.last, j),
            arc_variance: arc_var(inst, self.cov, prefix.last, j),
        }
    }

    /// Projects `j` appended to `prefix` and returns the extended prefix.
    pub fn step(&self, prefix: &Prefix, j: usize, out: &mut Vec<f64>) -> (f64, Prefix) {
        let inst = self.inst;
        let rho = prefix.last;
        let due = inst.due(j);
        let ready = inst.ready(j);
        let ei = self.early_inputs(prefix, j);
        let early = estimate_early_arrival(inst, self.x, &ei, self.early);

        let arr_nom = prefix.start_nom + inst.nominal().get(rho, j);
        let start_nom = arr_nom.max(ready);
        let arr_hat = ei.predicted_arrival;
        let start_hat = arr_hat.max(ready);
        let risk = risk_step(inst, self.cov, prefix.len, prefix.prev, rho, j, prefix.risk, early);

        out.clear();
        out.extend_from_slice(self.x);
        out.extend_from_slice(&[
            ready,
            due,
            inst.due(rho),
            inst.cost(rho, j),
            ei.arc_variance,
            (prefix.len + 1) as f64,
            arr_nom,
            start_nom,
            (arr_nom - due).max(0.0),
            self.pen.eval(arr_nom - due),
            self.t_hat.get(rho, j),
            arr_hat,
            start_hat,
            (arr_hat - due).max(0.0),
            self.pen.eval(arr_hat - due),
            risk,
        ]);
        let next = Prefix {
            last: j,
            prev: rho,
            len: prefix.len + 1,
            start_nom,
            start_hat,
            risk,
            max_ready: Some(prefix.max_ready.map_or(ready, |m| m.max(ready))),
            cost: ei.cost_to_here,
        };
        (early, next)
    }

    /// Projections of every customer of the route, in visiting order.
    pub fn project_route(&self, route: &Route) -> Vec<Projected> {
        let mut prefix = Prefix::depot();
        let mut out = Vec::with_capacity(route.len());
        for &j in route.customers() {
            let mut y = Vec::with_capacity(self.n_features());
            let (early, next) = self.step(&prefix, j, &mut y);
            out.push(Projected { y, early });
            prefix = next;
        }
        out
    }
}

/// Projected predictors of `customer` on `route`.
pub fn project(ctx: &FpfContext<'_>, route: &Route, customer: usize) -> Result<Vec<f64>> {
    let pos = route
        .customers()
        .iter()
        .position(|&c| c == customer)
        .ok_or_else(|| Error::Domain(format!("customer {customer} is not on the route")))?;
    let mut prefix = Prefix::depot();
    let mut y = Vec::with_capacity(ctx.n_features());
    for &j in &route.customers()[..=pos] {
        prefix = ctx.step(&prefix, j, &mut y).1;
    }
    Ok(y)
}

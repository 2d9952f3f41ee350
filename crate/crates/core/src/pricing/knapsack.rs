use super::objective::TimeBounds;
use super::Duals;
use crate::lp::fractional_knapsack;
use crate::problem::{Instance, PenaltyFn};

/// Knapsack completion bound: customers outside the path are items with
/// weight `q_j` and value `gamma_j - pi(tau + tmin(i, j) - l_j)`; the bound is
/// minus the continuous knapsack optimum over the remaining capacity.
#[allow(clippy::too_many_arguments)]
pub fn knapsack_bound(
    inst: &Instance,
    duals: &Duals,
    pen: Option<&PenaltyFn>,
    times: &TimeBounds,
    i: usize,
    tau: f64,
    rem: u32,
    visited: u128,
) -> f64 {
    if rem == 0 {
        return 0.0;
    }
    let n = inst.n_customers();
    let mut values = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut excluded = vec![false; n];
    for j in inst.customers() {
        let k = j - 1;
        weights[k] = inst.demand(j) as f64;
        excluded[k] = visited >> j & 1 == 1;
        let g = duals.gamma[j];
        values[k] = match pen {
            Some(p) if g > 0.0 && !excluded[k] => g - p.eval(tau + times.path.get(i, j) - inst.due(j)),
            _ => g,
        };
    }
    -fractional_knapsack(&values, &weights, rem as f64, &excluded).0
}

use serde::{Deserialize, Serialize};

use crate::datagen::TestSet;
use crate::error::{Error, Result};
use crate::problem::{solution_value, Instance, PenaltyFn, Solution};

/// Empirical test cost and its first/second-stage split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestCost {
    pub total: f64,
    pub first_stage: f64,
    pub second_stage: f64,
}

/// Average of `f(z(x), t)` over every test context `x` and every realization
/// `t` of that context. `solutions[k]` is the prescription for `test.points[k]`.
pub fn evaluate_test_cost(
    solutions: &[Option<&Solution>],
    test: &TestSet,
    inst: &Instance,
    pen: &PenaltyFn,
) -> Result<TestCost> {
    if solutions.len() != test.points.len() {
        return Err(Error::Dimension(format!(
            "{} prescriptions for {} test contexts",
            solutions.len(),
            test.points.len()
        )));
    }
    if test.points.is_empty() {
        return Err(Error::Validation("test set has no contexts".into()));
    }
    let mut first = 0.0;
    let mut second = 0.0;
    for (k, (sol, point)) in solutions.iter().zip(&test.points).enumerate() {
        let sol = sol.ok_or_else(|| Error::Validation(format!("no prescription for test context {k}")))?;
        if point.realizations.is_empty() {
            return Err(Error::Validation(format!("test context {k} has no realizations")));
        }
        let m = point.realizations.len() as f64;
        let (mut f, mut s) = (0.0, 0.0);
        for t in &point.realizations {
            let v = solution_value(sol, t, pen, inst)?;
            f += v.first_stage;
            s += v.second_stage;
        }
        first += f / m;
        second += s / m;
    }
    let n = test.points.len() as f64;
    let (first, second) = (first / n, second / n);
    Ok(TestCost {
        total: first + second,
        first_stage: first,
        second_stage: second,
    })
}

/// Full-information gap in percent: `100 (R - R_full) / R_full`.
pub fn full_info_gap(cost: f64, full: f64) -> Result<f64> {
    if !(full > 0.0) {
        return Err(Error::Domain(format!("full-information cost must be positive, got {full}")));
    }
    Ok(100.0 * (cost - full) / full)
}

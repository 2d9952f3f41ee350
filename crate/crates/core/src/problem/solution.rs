use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::penalty::PenaltyFn;
use super::route::{route_penalty, Route};
use super::travel::TravelTimes;
use crate::error::{Error, Result};

/// A set of routes partitioning the customers, plus the objective split the
/// producing method reported for it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub routes: Vec<Route>,
    #[serde(default)]
    pub method: Option<String>,
    /// First-stage (transportation) cost as reported by the solver.
    #[serde(default)]
    pub first_stage: f64,
    /// Second-stage (expected or approximated penalty) cost as reported by the solver.
    #[serde(default)]
    pub second_stage: f64,
}

/// First- and second-stage components of a solution value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolutionValue {
    pub first_stage: f64,
    pub second_stage: f64,
}

impl SolutionValue {
    pub fn total(&self) -> f64 {
        self.first_stage + self.second_stage
    }
}

impl Solution {
    pub fn new(mut routes: Vec<Route>) -> Self {
        routes.sort();
        Self {
            routes,
            method: None,
            first_stage: 0.0,
            second_stage: 0.0,
        }
    }

    /// Checks that every customer is visited exactly once, route capacities,
    /// and the fleet limit.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.routes.len() > inst.fleet() {
            return Err(Error::Validation(format!(
                "{} routes exceed fleet size {}",
                self.routes.len(),
                inst.fleet()
            )));
        }
        let mut visits = vec![0usize; inst.n_nodes()];
        for r in &self.routes {
            r.check(inst)?;
            for &c in r.customers() {
                visits[c] += 1;
            }
        }
        if let Some(c) = inst.customers().find(|&c| visits[c] != 1) {
            return Err(Error::Validation(format!("customer {c} visited {} times", visits[c])));
        }
        Ok(())
    }

    pub fn transport_cost(&self, inst: &Instance) -> f64 {
        self.routes.iter().map(|r| r.cost(inst)).sum()
    }

    /// Canonical fingerprint: routes sorted, e.g. `0-1-2-0|0-3-0`.
    pub fn fingerprint(&self) -> String {
        let mut names: Vec<String> = self.routes.iter().map(|r| r.to_string()).collect();
        names.sort();
        names.join("|")
    }
}

/// Value `C(z) + Q(z, t)` of a feasible solution under realized travel times.
pub fn solution_value(sol: &Solution, t: &TravelTimes, pen: &PenaltyFn, inst: &Instance) -> Result<SolutionValue> {
    sol.validate(inst)?;
    Ok(SolutionValue {
        first_stage: sol.transport_cost(inst),
        second_stage: sol.routes.iter().map(|r| route_penalty(r, t, pen, inst)).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::instance::fixtures::{line, node};

    #[test]
    fn zero_penalty_realization_gives_transport_cost() {
        let inst = line(3);
        let sol = Solution::new(vec![Route::new(&inst, vec![1, 2, 3]).unwrap()]);
        let v = solution_value(&sol, inst.nominal(), &PenaltyFn::Quadratic, &inst).unwrap();
        assert_eq!(v.second_stage, 0.0);
        assert!((v.total() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn one_late_customer_adds_squared_lateness() {
        let nodes = vec![node(0, 0.0, 0.0, 0, 0.0, 100.0), node(1, 4.0, 0.0, 1, 0.0, 1.5)];
        let inst = Instance::new("late", nodes, 10, 1).unwrap();
        let sol = Solution::new(vec![Route::new(&inst, vec![1]).unwrap()]);
        let v = solution_value(&sol, inst.nominal(), &PenaltyFn::Quadratic, &inst).unwrap();
        assert!((v.total() - (8.0 + 2.5 * 2.5)).abs() < 1e-12);
    }

    #[test]
    fn two_route_value_is_sum_of_route_values() {
        let nodes = vec![
            node(0, 0.0, 0.0, 0, 0.0, 100.0),
            node(1, 2.0, 1.0, 1, 0.0, 1.0),
            node(2, 4.0, 3.0, 1, 3.0, 4.0),
            node(3, -3.0, 1.0, 1, 0.0, 2.0),
            node(4, -1.0, -5.0, 1, 1.0, 9.0),
        ];
        let inst = Instance::new("four", nodes, 10, 2).unwrap();
        let r1 = Route::new(&inst, vec![1, 2]).unwrap();
        let r2 = Route::new(&inst, vec![3, 4]).unwrap();
        let sol = Solution::new(vec![r1.clone(), r2.clone()]);
        let pen = PenaltyFn::Quadratic;
        let v = solution_value(&sol, inst.nominal(), &pen, &inst).unwrap();
        let by_route = r1.cost(&inst)
            + route_penalty(&r1, inst.nominal(), &pen, &inst)
            + r2.cost(&inst)
            + route_penalty(&r2, inst.nominal(), &pen, &inst);
        assert!((v.total() - by_route).abs() < 1e-12);
        assert!(v.second_stage > 0.0);
    }

    #[test]
    fn infeasible_solutions_are_rejected() {
        let inst = line(3);
        let missing = Solution::new(vec![Route::new(&inst, vec![1, 2]).unwrap()]);
        assert!(solution_value(&missing, inst.nominal(), &PenaltyFn::Quadratic, &inst).is_err());
        let twice = Solution::new(vec![
            Route::new(&inst, vec![1, 2]).unwrap(),
            Route::new(&inst, vec![2, 3]).unwrap(),
        ]);
        assert!(twice.validate(&inst).is_err());
        let small_fleet = inst.with_fleet(1).unwrap();
        let two = Solution::new(vec![
            Route::new(&inst, vec![1, 2]).unwrap(),
            Route::new(&inst, vec![3]).unwrap(),
        ]);
        assert!(two.validate(&small_fleet).is_err());
    }
}

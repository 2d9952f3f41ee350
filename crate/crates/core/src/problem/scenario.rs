use serde::{Deserialize, Serialize};

use super::instance::Instance;
use super::penalty::PenaltyFn;
use super::route::{route_penalty, Route};
use super::travel::TravelTimes;
use crate::error::{Error, Result};

/// Weighted travel-time scenarios `{(t^w, alpha^w)}` with weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<TravelTimes>,
    weights: Vec<f64>,
}

impl ScenarioSet {
    /// Builds a set from nonnegative weights, renormalizing them to sum to 1.
    pub fn new(scenarios: Vec<TravelTimes>, weights: Vec<f64>) -> Result<Self> {
        if scenarios.is_empty() {
            return Err(Error::Validation("scenario set must not be empty".into()));
        }
        if scenarios.len() != weights.len() {
            return Err(Error::Dimension(format!(
                "{} scenarios but {} weights",
                scenarios.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation("scenario weights must be finite and nonnegative".into()));
        }
        let n = scenarios[0].n_nodes();
        if scenarios.iter().any(|t| t.n_nodes() != n) {
            return Err(Error::Dimension("scenarios differ in size".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::Validation("scenario weights sum to zero".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Ok(Self { scenarios, weights })
    }

    pub fn uniform(scenarios: Vec<TravelTimes>) -> Result<Self> {
        let w = vec![1.0; scenarios.len()];
        Self::new(scenarios, w)
    }

    pub fn single(t: TravelTimes) -> Self {
        Self {
            scenarios: vec![t],
            weights: vec![1.0],
        }
    }

    /// Drops zero-weight scenarios.
    pub fn without_zero_weights(&self) -> Self {
        let (scenarios, weights) = self
            .scenarios
            .iter()
            .zip(&self.weights)
            .filter(|(_, w)| **w > 0.0)
            .map(|(t, w)| (t.clone(), *w))
            .unzip();
        Self { scenarios, weights }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }

    pub fn scenarios(&self) -> &[TravelTimes] {
        &self.scenarios
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TravelTimes, f64)> {
        self.scenarios.iter().zip(self.weights.iter().copied())
    }

    /// Weighted average late-arrival penalty of a route.
    pub fn expected_penalty(&self, route: &Route, pen: &PenaltyFn, inst: &Instance) -> f64 {
        self.iter().map(|(t, w)| w * route_penalty(route, t, pen, inst)).sum()
    }

    /// Entrywise minimum over scenarios.
    pub fn min_times(&self) -> TravelTimes {
        let mut out = self.scenarios[0].clone();
        for t in &self.scenarios[1..] {
            for i in 0..out.n_nodes() {
                for j in 0..out.n_nodes() {
                    if t.get(i, j) < out.get(i, j) {
                        out.set(i, j, t.get(i, j));
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::instance::fixtures::line;

    #[test]
    fn weights_are_normalized() {
        let inst = line(2);
        let s = ScenarioSet::new(vec![inst.nominal().clone(), inst.nominal().clone()], vec![1.0, 3.0]).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s.weights()[1], 0.75);
        assert!(ScenarioSet::new(vec![], vec![]).is_err());
        assert!(ScenarioSet::new(vec![inst.nominal().clone()], vec![0.0]).is_err());
        let dropped = ScenarioSet::new(vec![inst.nominal().clone(), inst.nominal().clone()], vec![0.0, 2.0])
            .unwrap()
            .without_zero_weights();
        assert_eq!(dropped.len(), 1);
    }
}

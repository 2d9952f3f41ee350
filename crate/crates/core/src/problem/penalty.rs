use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Late-arrival penalty `pi(u)`, zero for `u <= 0` and nondecreasing above.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PenaltyFn {
    /// `u^2`
    #[default]
    Quadratic,
    /// `u`
    Linear,
    /// Piecewise-linear through `(u, pi(u))` breakpoints, extended past the
    /// last breakpoint with the slope of the last segment.
    Table { points: Vec<(f64, f64)> },
}

impl PenaltyFn {
    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Validation("penalty table needs at least two points".into()));
        }
        if points[0] != (0.0, 0.0) {
            return Err(Error::Validation("penalty table must start at (0, 0)".into()));
        }
        for w in points.windows(2) {
            let ((u0, v0), (u1, v1)) = (w[0], w[1]);
            if !(u1 > u0) || v1 < v0 || !v1.is_finite() {
                return Err(Error::Validation(format!(
                    "penalty table not strictly increasing in u / nondecreasing in value at ({u1}, {v1})"
                )));
            }
        }
        Ok(PenaltyFn::Table { points })
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        match self {
            PenaltyFn::Quadratic => u * u,
            PenaltyFn::Linear => u,
            PenaltyFn::Table { points } => {
                let k = points.partition_point(|&(x, _)| x <= u);
                let (lo, hi) = if k >= points.len() {
                    (points[points.len() - 2], points[points.len() - 1])
                } else {
                    (points[k - 1], points[k])
                };
                lo.1 + (hi.1 - lo.1) * (u - lo.0) / (hi.0 - lo.0)
            }
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::datagen::logistic;
use crate::error::{Error, Result};

/// L1-regularized logistic regression. Covariates are standardized internally;
/// the penalty applies to the standardized coefficients, never the intercept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogitModel {
    pub intercept: f64,
    pub coef: Vec<f64>,
    pub lambda: f64,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Penalized objective after each accepted step.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

const MAX_ITER: usize = 20_000;

fn nll(z: f64, y: f64) -> f64 {
    // -(y log S(z) + (1-y) log(1 - S(z))) = log(1 + e^z) - y z
    let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
    softplus - y * z
}

struct Problem<'a> {
    w: &'a [Vec<f64>],
    y: Vec<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn smooth(&self, b0: f64, b: &[f64]) -> f64 {
        let n = self.w.len() as f64;
        self.w
            .iter()
            .zip(&self.y)
            .map(|(row, &y)| nll(b0 + dot(b, row), y))
            .sum::<f64>()
            / n
    }

    fn grad(&self, b0: f64, b: &[f64]) -> (f64, Vec<f64>) {
        let n = self.w.len() as f64;
        let mut g0 = 0.0;
        let mut g = vec![0.0; b.len()];
        for (row, &y) in self.w.iter().zip(&self.y) {
            let r = logistic(b0 + dot(b, row)) - y;
            g0 += r;
            for (gk, x) in g.iter_mut().zip(row) {
                *gk += r * x;
            }
        }
        g.iter_mut().for_each(|v| *v /= n);
        (g0 / n, g)
    }

    fn objective(&self, b0: f64, b: &[f64]) -> f64 {
        self.smooth(b0, b) + self.lambda * b.iter().map(|v| v.abs()).sum::<f64>()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Proximal gradient descent with backtracking on
/// `mean nll(S(b0 + b'w), label) + lambda * |b|_1`.
pub fn fit_logit_l1(w: &[Vec<f64>], labels: &[bool], lambda: f64) -> Result<LogitModel> {
    if w.is_empty() || w.len() != labels.len() {
        return Err(Error::Dimension(format!("{} rows but {} labels", w.len(), labels.len())));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Config("lambda must be nonnegative".into()));
    }
    let p = w[0].len();
    if w.iter().any(|r| r.len() != p) {
        return Err(Error::Dimension("covariate rows differ in length".into()));
    }
    let n = w.len() as f64;
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for c in 0..p {
        let m = w.iter().map(|r| r[c]).sum::<f64>() / n;
        let sd = (w.iter().map(|r| (r[c] - m).powi(2)).sum::<f64>() / n).sqrt();
        mean[c] = m;
        if sd > 1e-12 {
            scale[c] = sd;
        }
    }
    let z: Vec<Vec<f64>> = w
        .iter()
        .map(|r| r.iter().enumerate().map(|(c, v)| (v - mean[c]) / scale[c]).collect())
        .collect();
    let prob = Problem {
        w: &z,
        y: labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect(),
        lambda,
    };

    let mut b0 = 0.0;
    let mut b = vec![0.0; p];
    let mut f = prob.objective(b0, &b);
    let mut trace = vec![f];
    let mut step = 1.0;
    for _ in 0..MAX_ITER {
        let smooth = prob.smooth(b0, &b);
        let (g0, g) = prob.grad(b0, &b);
        let mut accepted = None;
        for _ in 0..60 {
            let c0 = b0 - step * g0;
            let c: Vec<f64> = b
                .iter()
                .zip(&g)
                .map(|(v, gv)| soft_threshold(v - step * gv, step * lambda))
                .collect();
            let d0 = c0 - b0;
            let d: Vec<f64> = c.iter().zip(&b).map(|(x, y)| x - y).collect();
            let model = smooth + g0 * d0 + dot(&g, &d) + (d0 * d0 + dot(&d, &d)) / (2.0 * step);
            if prob.smooth(c0, &c) <= model + 1e-15 {
                accepted = Some((c0, c, d0 * d0 + dot(&d, &d)));
                break;
            }
            step *= 0.5;
        }
        let Some((c0, c, moved)) = accepted else { break };
        let fc = prob.objective(c0, &c);
        if fc > f {
            break;
        }
        b0 = c0;
        b = c;
        f = fc;
        trace.push(f);
        step *= 1.25;
        if moved.sqrt() < 1e-11 {
            break;
        }
    }
    Ok(LogitModel {
        intercept: b0,
        coef: b,
        lambda,
        mean,
        scale,
        objective_trace: trace,
    })
}

impl LogitModel {
    /// Constant-probability model.
    pub fn constant(p: f64, n_covariates: usize) -> Self {
        let p = p.clamp(1e-12, 1.0 - 1e-12);
        Self {
            intercept: (p / (1.0 - p)).ln(),
            coef: vec![0.0; n_covariates],
            lambda: 0.0,
            mean: vec![0.0; n_covariates],
            scale: vec![1.0; n_covariates],
            objective_trace: Vec::new(),
        }
    }

    pub fn linear_predictor(&self, w: &[f64]) -> f64 {
        self.intercept
            + self
                .coef
                .iter()
                .zip(w.iter().zip(self.mean.iter().zip(&self.scale)))
                .map(|(b, (v, (m, s)))| b * (v - m) / s)
                .sum::<f64>()
    }

    pub fn probability(&self, w: &[f64]) -> f64 {
        logistic(self.linear_predictor(w))
    }

    /// Coefficients on the original covariate scale.
    pub fn raw_coefficients(&self) -> (f64, Vec<f64>) {
        let coef: Vec<f64> = self.coef.iter().zip(&self.scale).map(|(b, s)| b / s).collect();
        let intercept = self.intercept - coef.iter().zip(&self.mean).map(|(b, m)| b * m).sum::<f64>();
        (intercept, coef)
    }
}

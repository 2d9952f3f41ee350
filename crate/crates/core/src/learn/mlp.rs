use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Weight of the squared-weight penalty (biases are not penalized).
    pub lambda: f64,
    pub seed: u64,
    /// Training rows beyond this count are subsampled.
    pub max_rows: usize,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![100, 100],
            learning_rate: 1e-3,
            epochs: 2000,
            lambda: 0.1,
            seed: 0,
            max_rows: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Dense {
    #[serde(with = "super::matrix_serde")]
    w: DMatrix<f64>,
    b: Vec<f64>,
}

/// Fully connected ReLU network with a scalar output.
///
/// Inputs and targets are standardized with training statistics; the loss and
/// its gradient are defined in the standardized space. Predictions are
/// clamped at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    layers: Vec<Dense>,
    x_mean: Vec<f64>,
    x_scale: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    pub loss_history: Vec<f64>,
    pub rows_used: usize,
}

struct Forward {
    /// Post-activation outputs per layer, input first.
    acts: Vec<DMatrix<f64>>,
}

impl MlpModel {
    /// Randomly initialized network (He-normal weights, zero biases).
    pub fn init(n_inputs: usize, hidden: &[usize], seed: u64) -> Self {
        let mut r = rng::stream(seed, 0x31);
        let mut sizes = vec![n_inputs];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).unwrap();
                Dense {
                    w: DMatrix::from_fn(w[1], w[0], |_, _| normal.sample(&mut r)),
                    b: vec![0.0; w[1]],
                }
            })
            .collect();
        Self {
            layers,
            x_mean: vec![0.0; n_inputs],
            x_scale: vec![1.0; n_inputs],
            y_mean: 0.0,
            y_scale: 1.0,
            loss_history: Vec::new(),
            rows_used: 0,
        }
    }

    /// A network whose output is identically zero.
    pub fn zero(n_inputs: usize) -> Self {
        let mut m = Self::init(n_inputs, &[], 0);
        m.layers[0].w.fill(0.0);
        m
    }

    pub fn n_inputs(&self) -> usize {
        self.x_mean.len()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend(l.w.iter());
            out.extend(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut() {
                *v = p[k];
                k += 1;
            }
            for v in l.b.iter_mut() {
                *v = p[k];
                k += 1;
            }
        }
    }

    /// Sum of squared weights.
    pub fn weight_norm_sq(&self) -> f64 {
        self.layers.iter().map(|l| l.w.norm_squared()).sum()
    }

    fn standardize(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(y.nrows(), y.ncols(), |r, c| (y[(r, c)] - self.x_mean[c]) / self.x_scale[c])
    }

    fn forward(&self, input: DMatrix<f64>) -> Forward {
        let mut acts = vec![input];
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut z = acts.last().unwrap() * l.w.transpose();
            for mut row in z.row_iter_mut() {
                for (v, b) in row.iter_mut().zip(&l.b) {
                    *v += b;
                    if li != last && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            acts.push(z);
        }
        Forward { acts }
    }

    /// Loss `mean((h - y)^2) + lambda * sum(w^2)` in standardized space, and its gradient
    /// in the order of [`MlpModel::params`].
    pub fn loss_and_grad(&self, y: &DMatrix<f64>, targets: &[f64], lambda: f64) -> (f64, Vec<f64>) {
        let n = y.nrows() as f64;
        let fw = self.forward(self.standardize(y));
        let out = fw.acts.last().unwrap();
        let mut delta = DMatrix::from_fn(out.nrows(), 1, |r, _| out[(r, 0)] - (targets[r] - self.y_mean) / self.y_scale);
        let mse = delta.norm_squared() / n;
        let loss = mse + lambda * self.weight_norm_sq();
        delta *= 2.0 / n;
        let mut grads: Vec<(DMatrix<f64>, Vec<f64>)> = Vec::with_capacity(self.layers.len());
        for li in (0..self.layers.len()).rev() {
            let l = &self.layers[li];
            let a_prev = &fw.acts[li];
            let gw = delta.transpose() * a_prev + &l.w * (2.0 * lambda);
            let gb: Vec<f64> = (0..delta.ncols()).map(|c| delta.column(c).sum()).collect();
            if li > 0 {
                let mut d_prev = &delta * &l.w;
                for (d, a) in d_prev.iter_mut().zip(a_prev.iter()) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = d_prev;
            }
            grads.push((gw, gb));
        }
        grads.reverse();
        let mut flat = Vec::with_capacity(self.n_params());
        for (gw, gb) in grads {
            flat.extend(gw.iter());
            flat.extend(gb);
        }
        (loss, flat)
    }

    pub fn loss(&self, y: &DMatrix<f64>, targets: &[f64], lambda: f64) -> f64 {
        self.loss_and_grad(y, targets, lambda).0
    }

    /// Unclamped prediction in target units.
    pub fn predict_raw(&self, input: &[f64]) -> f64 {
        let mut a: Vec<f64> = input
            .iter()
            .zip(self.x_mean.iter().zip(&self.x_scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let mut next = l.b.clone();
            for (o, nv) in next.iter_mut().enumerate() {
                let row = l.w.row(o);
                *nv += row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>();
                if li != last && *nv < 0.0 {
                    *nv = 0.0;
                }
            }
            a = next;
        }
        a[0] * self.y_scale + self.y_mean
    }

    pub fn predict(&self, input: &[f64]) -> f64 {
        self.predict_raw(input).max(0.0)
    }
}

/// Full-batch Adam on the standardized squared-error loss with weight decay `lambda`.
pub fn fit_mlp(y: &DMatrix<f64>, targets: &[f64], cfg: &MlpConfig) -> Result<MlpModel> {
    let (n_all, p) = y.shape();
    if n_all == 0 || targets.len() != n_all {
        return Err(Error::Dimension(format!("{} rows but {} targets", n_all, targets.len())));
    }
    if targets.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Domain("penalty targets must be finite and nonnegative".into()));
    }
    let (y, targets): (DMatrix<f64>, Vec<f64>) = if n_all > cfg.max_rows {
        let mut r = rng::stream(cfg.seed, 0x5B);
        let mut idx = sample(&mut r, n_all, cfg.max_rows).into_vec();
        idx.sort_unstable();
        (y.select_rows(idx.iter()), idx.iter().map(|&i| targets[i]).collect())
    } else {
        (y.clone(), targets.to_vec())
    };
    let n = y.nrows();
    let mut model = MlpModel::init(p, &cfg.hidden, cfg.seed);
    for c in 0..p {
        let col = y.column(c);
        let m = col.mean();
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        model.x_mean[c] = m;
        model.x_scale[c] = if sd > 1e-12 { sd } else { 1.0 };
    }
    let tm = targets.iter().sum::<f64>() / n as f64;
    let tsd = (targets.iter().map(|v| (v - tm).powi(2)).sum::<f64>() / n as f64).sqrt();
    model.y_mean = tm;
    model.y_scale = if tsd > 1e-12 { tsd } else { 1.0 };
    model.rows_used = n;

    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut params = model.params();
    let mut m1 = vec![0.0; params.len()];
    let mut m2 = vec![0.0; params.len()];
    for epoch in 1..=cfg.epochs {
        let (loss, grad) = model.loss_and_grad(&y, &targets, cfg.lambda);
        if !loss.is_finite() {
            return Err(Error::Divergence(format!("loss became {loss} at epoch {epoch}")));
        }
        model.loss_history.push(loss);
        let c1 = 1.0 - b1.powi(epoch as i32);
        let c2 = 1.0 - b2.powi(epoch as i32);
        for k in 0..params.len() {
            m1[k] = b1 * m1[k] + (1.0 - b1) * grad[k];
            m2[k] = b2 * m2[k] + (1.0 - b2) * grad[k] * grad[k];
            params[k] -= cfg.learning_rate * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
        }
        model.set_params(&params);
    }
    Ok(model)
}

/// Flattened finite-difference gradient, for checking [`MlpModel::loss_and_grad`].
pub fn numerical_gradient(model: &MlpModel, y: &DMatrix<f64>, targets: &[f64], lambda: f64, h: f64) -> Vec<f64> {
    let base = model.params();
    let mut probe = model.clone();
    let mut out = Vec::with_capacity(base.len());
    let mut p = base.clone();
    for k in 0..base.len() {
        p[k] = base[k] + h;
        probe.set_params(&p);
        let up = probe.loss(y, targets, lambda);
        p[k] = base[k] - h;
        probe.set_params(&p);
        let down = probe.loss(y, targets, lambda);
        p[k] = base[k];
        out.push((up - down) / (2.0 * h));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    fn batch(n: usize, p: usize, seed: u64) -> (DMatrix<f64>, Vec<f64>) {
        let mut r = rng::rng(seed);
        let y: DMatrix<f64> = DMatrix::from_fn(n, p, |_, _| r.gen_range(-2.0..2.0));
        let t = (0..n).map(|k| (y[(k, 0)] + 0.5 * y[(k, 1)]).max(0.0) + 0.1).collect();
        (y, t)
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (y, t) = batch(3, 5, 1);
        let mut model = MlpModel::init(5, &[100, 100], 2);
        model.y_mean = 0.3;
        model.y_scale = 1.7;
        let (_, g) = model.loss_and_grad(&y, &t, 0.1);
        let fd = numerical_gradient(&model, &y, &t, 0.1, 1e-4);
        let worst = g
            .iter()
            .zip(&fd)
            .map(|(a, b): (&f64, &f64)| (a - b).abs() / a.abs().max(b.abs()).max(1e-7))
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max relative error {worst}");
    }

    #[test]
    fn regularization_adds_exactly_lambda_times_weight_norm() {
        let (y, t) = batch(4, 3, 2);
        let model = MlpModel::init(3, &[8, 8], 3);
        let diff = model.loss(&y, &t, 0.1) - model.loss(&y, &t, 0.0);
        assert!((diff - 0.1 * model.weight_norm_sq()).abs() < 1e-12);
    }

    #[test]
    fn constant_targets_are_learned() {
        let (y, _) = batch(30, 3, 4);
        let t = vec![2.5; 30];
        let cfg = MlpConfig {
            hidden: vec![16, 16],
            epochs: 2000,
            seed: 1,
            ..Default::default()
        };
        let m = fit_mlp(&y, &t, &cfg).unwrap();
        for k in 0..30 {
            let row: Vec<f64> = y.row(k).iter().copied().collect();
            assert!((m.predict(&row) - 2.5).abs() < 1e-2);
        }
    }

    #[test]
    fn training_loss_decreases_and_predictions_are_nonnegative() {
        let (y, t) = batch(60, 4, 5);
        let cfg = MlpConfig {
            hidden: vec![20, 20],
            epochs: 400,
            lambda: 1e-3,
            seed: 3,
            ..Default::default()
        };
        let m = fit_mlp(&y, &t, &cfg).unwrap();
        assert!(m.loss_history.last().unwrap() < &m.loss_history[0]);
        let again = fit_mlp(&y, &t, &cfg).unwrap();
        assert_eq!(m, again);
        let mut r = rng::rng(8);
        for _ in 0..100 {
            let q: Vec<f64> = (0..4).map(|_| r.gen_range(-5.0..5.0)).collect();
            assert!(m.predict(&q) >= 0.0);
        }
    }

    #[test]
    fn row_cap_subsamples() {
        let (y, t) = batch(50, 2, 6);
        let cfg = MlpConfig {
            hidden: vec![4],
            epochs: 2,
            max_rows: 20,
            ..Default::default()
        };
        assert_eq!(fit_mlp(&y, &t, &cfg).unwrap().rows_used, 20);
        assert!(fit_mlp(&y, &[1.0], &cfg).is_err());
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = MlpModel::zero(3);
        assert_eq!(m.predict(&[1.0, 2.0, 3.0]), 0.0);
        let json = serde_json::to_string(&m).unwrap();
        let back: MlpModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}

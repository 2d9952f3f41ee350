use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// k-nearest-neighbour model over z-scored training features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    #[serde(with = "super::matrix_serde")]
    z: DMatrix<f64>,
}

/// `ceil(sqrt(n))`.
pub fn default_k(n: usize) -> usize {
    ((n as f64).sqrt().ceil() as usize).clamp(1, n.max(1))
}

pub fn fit_knn(x: &DMatrix<f64>, k: Option<usize>) -> Result<KnnModel> {
    let (n, p) = x.shape();
    if n == 0 {
        return Err(Error::Dimension("kNN needs at least one training row".into()));
    }
    let k = k.unwrap_or_else(|| default_k(n));
    if k == 0 || k > n {
        return Err(Error::Config(format!("kNN needs 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let mut mean = vec![0.0; p];
    let mut scale = vec![1.0; p];
    for j in 0..p {
        let col = x.column(j);
        let m = col.mean();
        let var = col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64;
        mean[j] = m;
        if var > 1e-24 {
            scale[j] = var.sqrt();
        }
    }
    let z = DMatrix::from_fn(n, p, |r, c| (x[(r, c)] - mean[c]) / scale[c]);
    Ok(KnnModel { k, mean, scale, z })
}

impl KnnModel {
    pub fn n_train(&self) -> usize {
        self.z.nrows()
    }

    /// Indices of the `k` nearest training rows, nearest first, ties by index.
    pub fn neighbors(&self, x_new: &[f64]) -> Vec<usize> {
        assert_eq!(x_new.len(), self.mean.len(), "feature dimension mismatch");
        let q: Vec<f64> = x_new
            .iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut d: Vec<(f64, usize)> = (0..self.n_train())
            .map(|r| {
                let dist: f64 = q.iter().enumerate().map(|(c, v)| (self.z[(r, c)] - v).powi(2)).sum();
                (dist, r)
            })
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().take(self.k).map(|(_, r)| r).collect()
    }

    /// `1/k` on the nearest rows, 0 elsewhere.
    pub fn weights(&self, x_new: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.n_train()];
        for r in self.neighbors(x_new) {
            w[r] = 1.0 / self.k as f64;
        }
        w
    }

    /// Mean of the neighbours' rows of `t`.
    pub fn predict(&self, t: &DMatrix<f64>, x_new: &[f64]) -> Vec<f64> {
        let nb = self.neighbors(x_new);
        (0..t.ncols())
            .map(|c| nb.iter().map(|&r| t[(r, c)]).sum::<f64>() / nb.len() as f64)
            .collect()
    }
}

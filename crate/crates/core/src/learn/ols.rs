use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multivariate least-squares fit `T ~ X B`, with `B` of shape `p x m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OlsModel {
    #[serde(with = "super::matrix_serde")]
    pub coef: DMatrix<f64>,
    pub n_train: usize,
}

/// Solves the least-squares problem by Householder QR of `X`.
pub fn fit_ols(x: &DMatrix<f64>, t: &DMatrix<f64>) -> Result<OlsModel> {
    let (n, p) = x.shape();
    if t.nrows() != n {
        return Err(Error::Dimension(format!("X has {n} rows but T has {}", t.nrows())));
    }
    if n <= p {
        return Err(Error::Dimension(format!("least squares needs n > p, got n = {n}, p = {p}")));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = (0..p).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..p).any(|i| r[(i, i)].abs() <= 1e-10 * diag_max.max(1e-300)) {
        return Err(Error::Singular("feature matrix is rank deficient".into()));
    }
    let qt_t = qr.q().transpose() * t;
    let coef = r
        .solve_upper_triangular(&qt_t)
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    Ok(OlsModel { coef, n_train: n })
}

impl OlsModel {
    pub fn p(&self) -> usize {
        self.coef.nrows()
    }

    pub fn n_outputs(&self) -> usize {
        self.coef.ncols()
    }

    /// Point prediction `B' x`.
    pub fn predict(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.p(), "feature dimension mismatch");
        let xv = DVector::from_column_slice(x);
        (self.coef.transpose() * xv).iter().copied().collect()
    }

    /// Predictions for every row of `X`.
    pub fn predict_rows(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        x * &self.coef
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;

    fn random(n: usize, m: usize, seed: u64) -> DMatrix<f64> {
        let mut r = rng::rng(seed);
        DMatrix::from_fn(n, m, |_, _| r.gen_range(-1.0..1.0))
    }

    #[test]
    fn intercept_only_gives_column_means() {
        let x = DMatrix::from_element(6, 1, 1.0);
        let t = random(6, 4, 1);
        let fit = fit_ols(&x, &t).unwrap();
        for j in 0..4 {
            let mean = t.column(j).mean();
            assert!((fit.coef[(0, j)] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_linear_data_is_interpolated() {
        let x = random(12, 3, 2);
        let b = random(3, 5, 3);
        let fit = fit_ols(&x, &(&x * &b)).unwrap();
        assert!((fit.coef - b).amax() < 1e-10);
    }

    #[test]
    fn residuals_are_orthogonal_to_features() {
        let x = random(20, 3, 4);
        let t = random(20, 5, 5);
        let fit = fit_ols(&x, &t).unwrap();
        let resid = &t - fit.predict_rows(&x);
        let lhs = (x.transpose() * resid).amax();
        assert!(lhs <= 1e-8 * (x.transpose() * &t).amax());
    }

    #[test]
    fn rank_deficiency_is_singular() {
        let mut x = random(10, 3, 6);
        let c0 = x.column(0).clone_owned();
        x.set_column(2, &(c0 * 2.0));
        assert!(matches!(fit_ols(&x, &random(10, 2, 7)), Err(Error::Singular(_))));
    }
}

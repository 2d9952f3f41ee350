use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::ols::OlsModel;
use crate::error::{Error, Result};
use crate::rng::Rng;

const EIGEN_FLOOR: f64 = 1e-10;

/// Residual covariance estimate `(T'T - B'X'T) / (n - p)` with a small
/// eigenvalue floor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovEstimate {
    #[serde(with = "super::matrix_serde")]
    pub sigma: DMatrix<f64>,
    pub dof: usize,
    /// Multiple of the identity added to make the matrix PSD.
    pub jitter: f64,
    /// Scaled residuals `R / sqrt(n - p)` (`n x m`), so that `sigma = F'F + jitter I`.
    #[serde(skip)]
    factor: Option<DMatrix<f64>>,
}

pub fn estimate_cov(x: &DMatrix<f64>, t: &DMatrix<f64>, ols: &OlsModel) -> Result<CovEstimate> {
    let (n, p) = x.shape();
    if n <= p {
        return Err(Error::Dimension(format!("covariance needs n > p, got n = {n}, p = {p}")));
    }
    let dof = n - p;
    // T'T - B'X'T equals R'R for the least-squares residuals R = T - XB.
    let resid = t - ols.predict_rows(x);
    let factor = resid / (dof as f64).sqrt();
    let mut sigma = factor.transpose() * &factor;
    symmetrize(&mut sigma);
    let jitter = eigen_floor(&sigma);
    for i in 0..sigma.nrows() {
        sigma[(i, i)] += jitter;
    }
    Ok(CovEstimate {
        sigma,
        dof,
        jitter,
        factor: Some(factor),
    })
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `max(0, floor - lambda_min)`.
fn eigen_floor(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let lambda_min = m.clone().symmetric_eigenvalues().min();
    (EIGEN_FLOOR - lambda_min).max(0.0)
}

impl CovEstimate {
    /// Wraps an arbitrary covariance matrix, symmetrized and floored.
    pub fn from_matrix(mut sigma: DMatrix<f64>, dof: usize) -> Result<Self> {
        if !sigma.is_square() {
            return Err(Error::Dimension("covariance must be square".into()));
        }
        symmetrize(&mut sigma);
        let jitter = eigen_floor(&sigma);
        for i in 0..sigma.nrows() {
            sigma[(i, i)] += jitter;
        }
        Ok(Self {
            sigma,
            dof,
            jitter,
            factor: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Diagonal entry for arc index `a`.
    pub fn variance(&self, a: usize) -> f64 {
        self.sigma[(a, a)]
    }

    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        self.sigma[(a, b)]
    }

    /// A sampler for `N(0, sigma)`.
    pub fn sampler(&self) -> Result<GaussianSampler> {
        if let Some(f) = &self.factor {
            return Ok(GaussianSampler::Factor {
                ft: f.transpose(),
                jitter_sd: self.jitter.sqrt(),
            });
        }
        let m = self.dim();
        let scale = (0..m).map(|i| self.sigma[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
        let mut extra = 0.0;
        for attempt in 0..12 {
            let mut s = self.sigma.clone();
            for i in 0..m {
                s[(i, i)] += extra;
            }
            if let Some(ch) = s.cholesky() {
                return Ok(GaussianSampler::Cholesky { l: ch.l() });
            }
            extra = scale * 1e-12 * 10f64.powi(attempt);
        }
        Err(Error::Numeric("covariance Cholesky failed after jitter".into()))
    }
}

/// Draws zero-mean Gaussian vectors with a fixed covariance.
#[derive(Clone, Debug)]
pub enum GaussianSampler {
    Factor { ft: DMatrix<f64>, jitter_sd: f64 },
    Cholesky { l: DMatrix<f64> },
}

impl GaussianSampler {
    pub fn draw(&self, rng: &mut Rng) -> DVector<f64> {
        match self {
            GaussianSampler::Factor { ft, jitter_sd } => {
                let z = DVector::from_fn(ft.ncols(), |_, _| StandardNormal.sample(rng));
                let mut v = ft * z;
                if *jitter_sd > 0.0 {
                    for e in v.iter_mut() {
                        let w: f64 = StandardNormal.sample(rng);
                        *e += jitter_sd * w;
                    }
                }
                v
            }
            GaussianSampler::Cholesky { l } => {
                let z = DVector::from_fn(l.ncols(), |_, _| StandardNormal.sample(rng));
                l * z
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::fit_ols;
    use crate::rng;
    use rand::Rng as _;

    #[test]
    fn matches_the_textbook_formula() {
        let mut r = rng::rng(3);
        let x = DMatrix::from_fn(15, 3, |_, j| if j == 0 { 1.0 } else { r.gen_range(0.0..1.0) });
        let t = DMatrix::from_fn(15, 4, |_, _| r.gen_range(0.0..5.0));
        let ols = fit_ols(&x, &t).unwrap();
        let c = estimate_cov(&x, &t, &ols).unwrap();
        let formula = (t.transpose() * &t - ols.coef.transpose() * x.transpose() * &t) / 12.0;
        assert!((&c.sigma - formula).amax() < 1e-9);
        assert_eq!(c.sigma, c.sigma.transpose());
        assert_eq!(c.dof, 12);
    }

    #[test]
    fn noiseless_data_gives_zero_covariance() {
        let mut r = rng::rng(4);
        let x = DMatrix::from_fn(10, 2, |_, j| if j == 0 { 1.0 } else { r.gen_range(0.0..1.0) });
        let b = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.5, -1.0, 2.0]);
        let t = &x * b;
        let c = estimate_cov(&x, &t, &fit_ols(&x, &t).unwrap()).unwrap();
        assert!(c.sigma.amax() < 1e-9);
    }

    #[test]
    fn degrees_of_freedom_error() {
        let x = DMatrix::from_element(3, 3, 1.0);
        let ols = OlsModel {
            coef: DMatrix::zeros(3, 2),
            n_train: 3,
        };
        assert!(matches!(
            estimate_cov(&x, &DMatrix::zeros(3, 2), &ols),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn explicit_matrix_sampler_uses_cholesky() {
        let s = CovEstimate::from_matrix(DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 2.0]), 10).unwrap();
        let sampler = s.sampler().unwrap();
        let mut r = rng::rng(1);
        let n = 40_000;
        let mut acc = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n {
            let v = sampler.draw(&mut r);
            acc += &v * v.transpose();
        }
        acc /= n as f64;
        assert!((acc - &s.sigma).amax() < 0.15);
    }
}

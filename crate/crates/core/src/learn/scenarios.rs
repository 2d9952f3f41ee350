use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cov::CovEstimate;
use super::ols::OlsModel;
use crate::error::{Error, Result};
use crate::problem::{Instance, ScenarioSet, TravelTimes};
use crate::rng;

/// Clamps an arc vector at the instance's nominal times and builds a matrix.
pub fn clamp_to_nominal(inst: &Instance, mut arcs: Vec<f64>) -> Result<TravelTimes> {
    for (a, &(i, j)) in inst.arcs().pairs().iter().enumerate() {
        let floor = inst.nominal().get(i, j);
        if !(arcs[a] >= floor) {
            arcs[a] = floor;
        }
    }
    TravelTimes::from_arc_vector(inst.arcs(), &arcs)
}

/// `count` i.i.d. draws from `N(B'x, Sigma)`, clamped at nominal, equally weighted.
pub fn sample_conditional_scenarios(
    ols: &OlsModel,
    cov: &CovEstimate,
    inst: &Instance,
    x: &[f64],
    count: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    let raw = draw_conditional(ols, cov, x, count, seed)?;
    let scenarios = raw
        .into_iter()
        .map(|v| clamp_to_nominal(inst, v))
        .collect::<Result<Vec<_>>>()?;
    ScenarioSet::uniform(scenarios)
}

/// Unclamped conditional draws in arc order.
pub fn draw_conditional(ols: &OlsModel, cov: &CovEstimate, x: &[f64], count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(Error::Config("scenario count must be at least 1".into()));
    }
    if cov.dim() != ols.n_outputs() {
        return Err(Error::Dimension("covariance and regression disagree on arc count".into()));
    }
    let mean = ols.predict(x);
    let sampler = cov.sampler()?;
    let mut r = rng::stream(seed, 0xC5);
    Ok((0..count)
        .map(|_| {
            let e = sampler.draw(&mut r);
            mean.iter().zip(e.iter()).map(|(m, e)| m + e).collect()
        })
        .collect())
}

/// Orientation of the residuals added to the new prediction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResidualSign {
    /// `eps_k = g(x_k) - t_k`, scenario `g(x_new) + eps_k`.
    #[default]
    FittedMinusObserved,
    /// `eps_k = t_k - g(x_k)`, scenario `g(x_new) + eps_k`.
    ObservedMinusFitted,
}

/// One scenario per training row: the new prediction perturbed by that row's residual.
pub fn residual_scenarios(
    ols: &OlsModel,
    x: &DMatrix<f64>,
    t: &DMatrix<f64>,
    inst: &Instance,
    x_new: &[f64],
    sign: ResidualSign,
) -> Result<ScenarioSet> {
    let g_new = ols.predict(x_new);
    let fitted = ols.predict_rows(x);
    let mut scenarios = Vec::with_capacity(x.nrows());
    for k in 0..x.nrows() {
        let arcs: Vec<f64> = (0..t.ncols())
            .map(|a| {
                let eps = fitted[(k, a)] - t[(k, a)];
                match sign {
                    ResidualSign::FittedMinusObserved => g_new[a] + eps,
                    ResidualSign::ObservedMinusFitted => g_new[a] - eps,
                }
            })
            .collect();
        scenarios.push(clamp_to_nominal(inst, arcs)?);
    }
    ScenarioSet::uniform(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_dataset, GenerativeModel, ModelKind};
    use crate::learn::{estimate_cov, fit_ols};
    use crate::problem::fixtures::line;

    fn trained() -> (Instance, crate::datagen::Dataset, OlsModel, CovEstimate) {
        let inst = line(2);
        let m = GenerativeModel::new(ModelKind::Linear, &inst, 2, 1).unwrap();
        let d = make_dataset(&m, &inst, 40, 3, 2).unwrap();
        let ols = fit_ols(&d.x, &d.t).unwrap();
        let cov = estimate_cov(&d.x, &d.t, &ols).unwrap();
        (inst, d, ols, cov)
    }

    #[test]
    fn zero_covariance_reproduces_the_mean() {
        let (inst, _, ols, _) = trained();
        let zero = CovEstimate::from_matrix(DMatrix::zeros(6, 6), 1).unwrap();
        let s = sample_conditional_scenarios(&ols, &zero, &inst, &[1.0, 1.0, 0.0], 5, 3).unwrap();
        let mean = clamp_to_nominal(&inst, ols.predict(&[1.0, 1.0, 0.0])).unwrap();
        for t in s.scenarios() {
            for (a, b) in t.as_slice().iter().zip(mean.as_slice()) {
                assert!((a - b).abs() < 1e-4);
            }
        }
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_scenarios() {
        let (inst, _, ols, cov) = trained();
        let a = sample_conditional_scenarios(&ols, &cov, &inst, &[1.0, 0.0, 1.0], 7, 9).unwrap();
        let b = sample_conditional_scenarios(&ols, &cov, &inst, &[1.0, 0.0, 1.0], 7, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.scenarios().iter().all(|t| (0..3).all(|i| (0..3).all(|j| t.get(i, j) >= inst.nominal().get(i, j)))));
    }

    #[test]
    fn residual_scenarios_identity() {
        let (inst, d, ols, _) = trained();
        let x_new = [1.0, 1.0, 1.0];
        let s = residual_scenarios(&ols, &d.x, &d.t, &inst, &x_new, ResidualSign::FittedMinusObserved).unwrap();
        assert_eq!(s.len(), d.n());
        let g_new = ols.predict(&x_new);
        let fitted = ols.predict_rows(&d.x);
        for (k, t) in s.scenarios().iter().enumerate() {
            let v = t.to_arc_vector(inst.arcs());
            for a in 0..v.len() {
                let eps = fitted[(k, a)] - d.t[(k, a)];
                let floor = inst.nominal().to_arc_vector(inst.arcs())[a];
                assert_eq!(v[a], (g_new[a] + eps).max(floor));
            }
        }
        let conv = residual_scenarios(&ols, &d.x, &d.t, &inst, &x_new, ResidualSign::ObservedMinusFitted).unwrap();
        assert_ne!(conv, s);
    }

    #[test]
    fn residual_scenarios_with_zero_residuals_collapse() {
        let inst = line(2);
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0]);
        let b = DMatrix::from_fn(2, 6, |r, c| if r == 0 { 10.0 + c as f64 } else { 1.0 });
        let t = &x * &b;
        let ols = fit_ols(&x, &t).unwrap();
        let s = residual_scenarios(&ols, &x, &t, &inst, &[1.0, 1.0], ResidualSign::FittedMinusObserved).unwrap();
        let g = clamp_to_nominal(&inst, ols.predict(&[1.0, 1.0])).unwrap();
        for sc in s.scenarios() {
            for (a, b) in sc.as_slice().iter().zip(g.as_slice()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }
}

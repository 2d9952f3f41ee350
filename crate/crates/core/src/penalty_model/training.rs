use std::collections::HashSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use super::fpf::{feature_names, FpfContext, Prefix};
use super::risk::{early_covariates, early_impossible, EarlyArrival, EarlyModel};
use crate::error::{Error, Result};
use crate::learn::{clamp_to_nominal, fit_logit_l1, CovEstimate, OlsModel};
use crate::problem::{arrival_times, Instance, PenaltyFn, Route, TravelTimes};
use crate::rng;

/// Minimum number of labeled visits before a per-customer logit is fitted.
pub const MIN_LOGIT_EXAMPLES: usize = 20;
/// Kept zero-target rows per positive row.
pub const ZERO_RATIO: usize = 3;
/// Default L1 weight of the early-arrival logits.
pub const LOGIT_LAMBDA: f64 = 0.01;

/// Routes recorded by one solver run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteRun {
    pub name: String,
    pub routes: Vec<Route>,
}

/// Training periods with their realized and predicted travel times.
pub struct Periods<'a> {
    pub inst: &'a Instance,
    pub x: &'a DMatrix<f64>,
    pub cov: &'a CovEstimate,
    realized: Vec<TravelTimes>,
    predicted: Vec<TravelTimes>,
}

impl<'a> Periods<'a> {
    /// Realized times from the rows of `t`; predictions from `ols`, clamped at nominal.
    pub fn new(inst: &'a Instance, x: &'a DMatrix<f64>, t: &DMatrix<f64>, ols: &OlsModel, cov: &'a CovEstimate) -> Result<Self> {
        if x.nrows() != t.nrows() || t.ncols() != inst.arcs().len() {
            return Err(Error::Dimension(format!(
                "X is {}x{}, T is {}x{}, instance has {} arcs",
                x.nrows(),
                x.ncols(),
                t.nrows(),
                t.ncols(),
                inst.arcs().len()
            )));
        }
        let mut realized = Vec::with_capacity(t.nrows());
        let mut predicted = Vec::with_capacity(t.nrows());
        for k in 0..t.nrows() {
            let row: Vec<f64> = t.row(k).iter().copied().collect();
            realized.push(TravelTimes::from_arc_vector(inst.arcs(), &row)?);
            let xk: Vec<f64> = x.row(k).iter().copied().collect();
            predicted.push(clamp_to_nominal(inst, ols.predict(&xk))?);
        }
        Ok(Self {
            inst,
            x,
            cov,
            realized,
            predicted,
        })
    }

    pub fn len(&self) -> usize {
        self.realized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realized.is_empty()
    }

    pub fn features(&self, k: usize) -> Vec<f64> {
        self.x.row(k).iter().copied().collect()
    }

    pub fn realized(&self, k: usize) -> &TravelTimes {
        &self.realized[k]
    }

    pub fn predicted(&self, k: usize) -> &TravelTimes {
        &self.predicted[k]
    }
}

/// Distinct routes over all runs, first occurrence first, with the run that contributed them.
pub fn distinct_routes(runs: &[RouteRun]) -> Vec<(usize, &Route)> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (r, run) in runs.iter().enumerate() {
        for route in &run.routes {
            if seen.insert(route.customers().to_vec()) {
                out.push((r, route));
            }
        }
    }
    out
}

/// Laplace-smoothed frequency `(k + 1) / (n + 2)`.
fn smoothed(pos: usize, n: usize) -> f64 {
    (pos as f64 + 1.0) / (n as f64 + 2.0)
}

/// Fits one early-arrival predictor per customer from the routes that visit it.
/// Visits covered by a hard-zero rule are left out of the fit.
pub fn fit_early_arrival(periods: &Periods<'_>, runs: &[RouteRun], lambda: f64) -> Result<EarlyArrival> {
    let inst = periods.inst;
    let routes = distinct_routes(runs);
    let mut w: Vec<Vec<Vec<f64>>> = vec![Vec::new(); inst.n_nodes()];
    let mut labels: Vec<Vec<bool>> = vec![Vec::new(); inst.n_nodes()];
    let none = EarlyArrival::constant(inst, 0.0);
    let mut scratch = Vec::new();
    for k in 0..periods.len() {
        let xk = periods.features(k);
        let ctx = FpfContext {
            inst,
            pen: &PenaltyFn::Linear,
            x: &xk,
            t_hat: periods.predicted(k),
            cov: periods.cov,
            early: &none,
        };
        for &(_, route) in &routes {
            let visits = arrival_times(route, periods.realized(k), inst);
            let mut prefix = Prefix::depot();
            for (v, &j) in visits.iter().zip(route.customers()) {
                let ei = ctx.early_inputs(&prefix, j);
                if !early_impossible(inst, &ei) {
                    w[j].push(early_covariates(inst, &xk, &ei));
                    labels[j].push(v.arrival < inst.ready(j));
                }
                prefix = ctx.step(&prefix, j, &mut scratch).1;
            }
        }
    }
    let mut models = vec![EarlyModel::Frequency { p: 0.0 }];
    for j in inst.customers() {
        let n = labels[j].len();
        let pos = labels[j].iter().filter(|&&l| l).count();
        let model = if n < MIN_LOGIT_EXAMPLES || pos == 0 || pos == n {
            EarlyModel::Frequency { p: smoothed(pos, n) }
        } else {
            EarlyModel::Logit(fit_logit_l1(&w[j], &labels[j], lambda)?)
        };
        models.push(model);
    }
    Ok(EarlyArrival { models })
}

/// Where a training row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSource {
    pub run: usize,
    pub route: usize,
    pub customer: usize,
    pub period: usize,
}

/// Projected predictors `Y` and realized penalties for Model (L) training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyTrainingSet {
    #[serde(with = "crate::learn::matrix_serde")]
    pub y: DMatrix<f64>,
    pub targets: Vec<f64>,
    pub sources: Vec<RowSource>,
    pub runs: Vec<String>,
    pub names: Vec<String>,
}

/// One row per (route, customer, training period) over the distinct routes of `runs`.
pub fn build_training_set(
    periods: &Periods<'_>,
    runs: &[RouteRun],
    early: &EarlyArrival,
    pen: &PenaltyFn,
) -> Result<PenaltyTrainingSet> {
    let inst = periods.inst;
    let routes = distinct_routes(runs);
    if routes.is_empty() {
        return Err(Error::Config("penalty training needs at least one route".into()));
    }
    let p = periods.x.ncols();
    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut sources = Vec::new();
    for k in 0..periods.len() {
        let xk = periods.features(k);
        let ctx = FpfContext {
            inst,
            pen,
            x: &xk,
            t_hat: periods.predicted(k),
            cov: periods.cov,
            early,
        };
        for (ri, &(run, route)) in routes.iter().enumerate() {
            let visits = arrival_times(route, periods.realized(k), inst);
            for (proj, v) in ctx.project_route(route).into_iter().zip(visits) {
                data.extend_from_slice(&proj.y);
                targets.push(pen.eval(v.arrival - inst.due(v.customer)));
                sources.push(RowSource {
                    run,
                    route: ri,
                    customer: v.customer,
                    period: k,
                });
            }
        }
    }
    let names = feature_names(p);
    Ok(PenaltyTrainingSet {
        y: DMatrix::from_row_slice(targets.len(), names.len(), &data),
        targets,
        sources,
        runs: runs.iter().map(|r| r.name.clone()).collect(),
        names,
    })
}

impl PenaltyTrainingSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.targets.iter().filter(|&&v| v > 0.0).count()
    }

    /// True when every target is zero.
    pub fn is_degenerate(&self) -> bool {
        self.n_positive() == 0
    }

    /// Keeps every positive row and a seeded uniform subsample of at most
    /// `ZERO_RATIO` zero rows per positive row, in original order.
    /// A degenerate set is returned unchanged.
    pub fn balanced(&self, seed: u64) -> Self {
        let pos = self.n_positive();
        let zeros: Vec<usize> = (0..self.len()).filter(|&r| self.targets[r] <= 0.0).collect();
        let cap = ZERO_RATIO * pos;
        if pos == 0 || zeros.len() <= cap {
            return self.clone();
        }
        let mut keep = vec![false; self.len()];
        (0..self.len()).filter(|&r| self.targets[r] > 0.0).for_each(|r| keep[r] = true);
        let mut rng = rng::stream(seed, 0x5a5a);
        for i in sample(&mut rng, zeros.len(), cap) {
            keep[zeros[i]] = true;
        }
        let rows: Vec<usize> = (0..self.len()).filter(|&r| keep[r]).collect();
        Self {
            y: self.y.select_rows(&rows),
            targets: rows.iter().map(|&r| self.targets[r]).collect(),
            sources: rows.iter().map(|&r| self.sources[r]).collect(),
            runs: self.runs.clone(),
            names: self.names.clone(),
        }
    }

    /// Writes predictors, target and provenance columns.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = self.names.clone();
        header.extend(["target", "run", "route", "customer", "period"].map(String::from));
        w.write_record(&header)?;
        for r in 0..self.len() {
            let s = self.sources[r];
            let mut rec: Vec<String> = self.y.row(r).iter().map(|v| v.to_string()).collect();
            rec.push(self.targets[r].to_string());
            rec.push(self.runs[s.run].clone());
            rec.extend([s.route, s.customer, s.period].map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Constant-probability early-arrival model for callers without training routes.
pub fn uninformed_early(inst: &Instance) -> EarlyArrival {
    let mut e = EarlyArrival::constant(inst, 0.5);
    e.models[0] = EarlyModel::Frequency { p: 0.0 };
    e
}

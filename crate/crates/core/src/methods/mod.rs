//! The ten prescriptive methods: each turns historical data and a new feature
//! vector into a solver objective and returns the optimal routes.

use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::datagen::{Dataset, TestPoint};
use crate::error::{Error, Result};
use crate::learn::{
    clamp_to_nominal, estimate_cov, fit_knn, fit_mlp, fit_ols, residual_scenarios, sample_conditional_scenarios,
    CovEstimate, KnnModel, MlpConfig, MlpModel, OlsModel, ResidualSign,
};
use crate::penalty_model::{build_training_set, distinct_routes, fit_early_arrival, Periods, RouteRun, LOGIT_LAMBDA};
use crate::pricing::{LearnedObjective, ScenarioObjective};
use crate::problem::{Instance, PenaltyFn, ScenarioSet, Solution, TravelTimes};
use crate::rng;
use crate::solver::{branch_and_price, SolveReport, SolverConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "D-avg")]
    DAvg,
    #[serde(rename = "PTO-OLS")]
    PtoOls,
    #[serde(rename = "PTO-kNN")]
    PtoKnn,
    #[serde(rename = "SAA")]
    Saa,
    #[serde(rename = "SAA-kNN")]
    SaaKnn,
    #[serde(rename = "CSAA")]
    Csaa,
    #[serde(rename = "RSAA")]
    Rsaa,
    #[serde(rename = "P-NN")]
    Pnn,
    #[serde(rename = "PTO-F")]
    PtoF,
    #[serde(rename = "Full")]
    Full,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::DAvg,
        Method::PtoOls,
        Method::PtoKnn,
        Method::Saa,
        Method::SaaKnn,
        Method::Csaa,
        Method::Rsaa,
        Method::Pnn,
        Method::PtoF,
        Method::Full,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::DAvg => "D-avg",
            Method::PtoOls => "PTO-OLS",
            Method::PtoKnn => "PTO-kNN",
            Method::Saa => "SAA",
            Method::SaaKnn => "SAA-kNN",
            Method::Csaa => "CSAA",
            Method::Rsaa => "RSAA",
            Method::Pnn => "P-NN",
            Method::PtoF => "PTO-F",
            Method::Full => "Full",
        }
    }

    /// Full-information benchmarks that read the test set.
    pub fn is_benchmark(&self) -> bool {
        matches!(self, Method::PtoF | Method::Full)
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Case-insensitive; dashes and underscores are optional.
    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.as_str().replace('-', "").to_ascii_lowercase() == key)
            .ok_or_else(|| Error::Config(format!("unknown method '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    /// Conditional scenarios drawn by CSAA.
    pub csaa_count: usize,
    /// Neighbours for the kNN methods; `None` uses the default rule.
    pub knn_k: Option<usize>,
    pub residual_sign: ResidualSign,
    pub mlp: MlpConfig,
    pub logit_lambda: f64,
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            csaa_count: 50,
            knn_k: None,
            residual_sign: ResidualSign::default(),
            mlp: MlpConfig::default(),
            logit_lambda: LOGIT_LAMBDA,
            seed: 0,
        }
    }
}

/// Estimators fitted once per dataset and shared across feature vectors.
pub struct Trained<'a> {
    pub inst: &'a Instance,
    pub data: &'a Dataset,
    pub ols: OlsModel,
    pub cov: CovEstimate,
    pub knn: KnnModel,
}

impl<'a> Trained<'a> {
    pub fn fit(inst: &'a Instance, data: &'a Dataset, cfg: &MethodConfig) -> Result<Self> {
        if data.t.ncols() != inst.arcs().len() {
            return Err(Error::Dimension(format!(
                "dataset has {} arc columns, instance has {} arcs",
                data.t.ncols(),
                inst.arcs().len()
            )));
        }
        let ols = fit_ols(&data.x, &data.t)?;
        let cov = estimate_cov(&data.x, &data.t, &ols)?;
        let knn = fit_knn(&data.x, cfg.knn_k)?;
        Ok(Self {
            inst,
            data,
            ols,
            cov,
            knn,
        })
    }

    fn rows(&self) -> Result<Vec<TravelTimes>> {
        (0..self.data.n())
            .map(|k| TravelTimes::from_arc_vector(self.inst.arcs(), &self.data.row_times(k)))
            .collect()
    }

    /// Travel times used by the scenario-based methods at `x`.
    pub fn scenarios(&self, method: Method, x: &[f64], test: Option<&TestPoint>, cfg: &MethodConfig) -> Result<ScenarioSet> {
        let inst = self.inst;
        if x.len() != self.data.p() {
            return Err(Error::Dimension(format!("feature vector has {} entries, expected {}", x.len(), self.data.p())));
        }
        let test = || {
            test.ok_or_else(|| Error::Config(format!("{method} is a full-information benchmark and needs a test context")))
        };
        Ok(match method {
            Method::DAvg => {
                let rows = self.rows()?;
                ScenarioSet::single(clamp_to_nominal(inst, mean_arcs(inst, &rows))?)
            }
            Method::PtoOls => ScenarioSet::single(clamp_to_nominal(inst, self.ols.predict(x))?),
            Method::PtoKnn => ScenarioSet::single(clamp_to_nominal(inst, self.knn.predict(&self.data.t, x))?),
            Method::Saa => ScenarioSet::uniform(self.rows()?)?,
            Method::SaaKnn => ScenarioSet::new(self.rows()?, self.knn.weights(x))?.without_zero_weights(),
            Method::Csaa => {
                sample_conditional_scenarios(&self.ols, &self.cov, inst, x, cfg.csaa_count, rng::mix(cfg.seed, 0xC5AA))?
            }
            Method::Rsaa => residual_scenarios(&self.ols, &self.data.x, &self.data.t, inst, x, cfg.residual_sign)?,
            Method::PtoF => ScenarioSet::single(clamp_to_nominal(inst, mean_arcs(inst, &test()?.realizations))?),
            Method::Full => ScenarioSet::uniform(test()?.realizations.clone())?,
            Method::Pnn => return Err(Error::Config("P-NN has no scenario set".into())),
        })
    }
}

fn mean_arcs(inst: &Instance, rows: &[TravelTimes]) -> Vec<f64> {
    let mut acc = vec![0.0; inst.arcs().len()];
    for t in rows {
        for (a, v) in t.to_arc_vector(inst.arcs()).into_iter().enumerate() {
            acc[a] += v;
        }
    }
    acc.iter().map(|v| v / rows.len() as f64).collect()
}

/// Training summary of a P-NN run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PnnDiagnostics {
    /// Distinct routes contributed by the donor runs.
    pub donor_routes: usize,
    /// Rows before zero-target subsampling.
    pub rows: usize,
    pub rows_used: usize,
    pub positive_rows: usize,
    pub final_loss: Option<f64>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prescription {
    pub method: Method,
    pub x: Vec<f64>,
    pub solution: Solution,
    pub report: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pnn: Option<PnnDiagnostics>,
}

impl Prescription {
    pub fn objective(&self) -> f64 {
        self.report.objective
    }
}

fn finish(method: Method, x: &[f64], mut report: SolveReport) -> Prescription {
    report.solution.method = Some(method.as_str().to_string());
    Prescription {
        method,
        x: x.to_vec(),
        solution: report.solution.clone(),
        report,
        pnn: None,
    }
}

/// Solves `method` at feature vector `x`. P-NN trains on the pools of its own
/// D-avg and SAA donor runs.
pub fn prescribe(
    method: Method,
    trained: &Trained<'_>,
    x: &[f64],
    pen: &PenaltyFn,
    test: Option<&TestPoint>,
    cfg: &MethodConfig,
    solver: &SolverConfig,
) -> Result<Prescription> {
    if method == Method::Pnn {
        let donors = [
            prescribe(Method::DAvg, trained, x, pen, test, cfg, solver)?,
            prescribe(Method::Saa, trained, x, pen, test, cfg, solver)?,
        ];
        return pnn_pipeline(trained, x, pen, &donors, cfg, solver);
    }
    let scen = trained.scenarios(method, x, test, cfg)?;
    let obj = ScenarioObjective::new(trained.inst, &scen, pen);
    let report = branch_and_price(trained.inst, &obj, solver)?;
    Ok(finish(method, x, report))
}

/// Trains the penalty network on every route the donors' solvers generated
/// and solves the learned-penalty model at `x`.
pub fn pnn_pipeline(
    trained: &Trained<'_>,
    x: &[f64],
    pen: &PenaltyFn,
    donors: &[Prescription],
    cfg: &MethodConfig,
    solver: &SolverConfig,
) -> Result<Prescription> {
    let inst = trained.inst;
    let runs: Vec<RouteRun> = donors
        .iter()
        .map(|d| RouteRun {
            name: d.method.as_str().to_string(),
            routes: if d.report.pool.is_empty() { d.solution.routes.clone() } else { d.report.pool.clone() },
        })
        .filter(|r| !r.routes.is_empty())
        .collect();
    if runs.is_empty() {
        return Err(Error::Config("P-NN needs at least one donor run with routes".into()));
    }
    let data = trained.data;
    let periods = Periods::new(inst, &data.x, &data.t, &trained.ols, &trained.cov)?;
    let early = fit_early_arrival(&periods, &runs, cfg.logit_lambda)?;
    let set = build_training_set(&periods, &runs, &early, pen)?;
    let donor_routes = distinct_routes(&runs).len();
    let n_features = set.names.len();
    let (mlp, used, loss) = if set.is_degenerate() {
        warn!("all {} penalty targets are zero; P-NN falls back to a zero predictor", set.len());
        (MlpModel::zero(n_features), set.len(), None)
    } else {
        let bal = set.balanced(rng::mix(cfg.seed, 0xB1));
        let mut mcfg = cfg.mlp.clone();
        mcfg.seed = rng::mix(cfg.seed, mcfg.seed);
        let m = fit_mlp(&bal.y, &bal.targets, &mcfg)?;
        let loss = m.loss_history.last().copied();
        (m, bal.len(), loss)
    };
    let t_hat = clamp_to_nominal(inst, trained.ols.predict(x))?;
    let realized: Vec<TravelTimes> = (0..periods.len()).map(|k| periods.realized(k).clone()).collect();
    let obj = LearnedObjective::new(inst, pen, x, &t_hat, &trained.cov, &early, &mlp, &realized);
    let report = branch_and_price(inst, &obj, solver)?;
    let mut out = finish(Method::Pnn, x, report);
    out.pnn = Some(PnnDiagnostics {
        donor_routes,
        rows: set.len(),
        rows_used: used,
        positive_rows: set.n_positive(),
        final_loss: loss,
        degenerate: set.is_degenerate(),
    });
    Ok(out)
}

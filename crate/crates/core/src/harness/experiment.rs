use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::eval::{evaluate_test_cost, full_info_gap};
use super::report::write_rows;
use crate::datagen::{make_dataset, make_testset, GenerativeModel, ModelKind};
use crate::error::{Error, Result};
use crate::methods::{pnn_pipeline, prescribe, Method, MethodConfig, Prescription, Trained};
use crate::problem::{solomon, Instance, PenaltyFn};
use crate::rng;
use crate::solver::{SolveReport, SolverConfig};

/// Declarative description of an experiment grid, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Built-in Solomon names or paths to Solomon files.
    pub instances: Vec<String>,
    pub n_customers: usize,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    /// Training observations.
    pub n: usize,
    /// Features including the intercept.
    pub p: usize,
    pub n_x: usize,
    pub n_t: usize,
    pub methods: Vec<Method>,
    pub penalty: PenaltyFn,
    /// Per-solve wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    pub label_cap: usize,
    pub method: MethodConfig,
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            instances: vec!["R101".into(), "C101".into(), "RC101".into()],
            n_customers: 10,
            models: vec![ModelKind::Linear],
            seeds: vec![0],
            n: 100,
            p: 10,
            n_x: 10,
            n_t: 50,
            methods: Method::ALL.to_vec(),
            penalty: PenaltyFn::Quadratic,
            time_limit: Some(3600.0),
            node_limit: None,
            label_cap: 2_000_000,
            method: MethodConfig::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.instances.is_empty() || self.models.is_empty() || self.seeds.is_empty() || self.methods.is_empty() {
            return bad("instances, models, seeds and methods must be nonempty");
        }
        if self.n_customers == 0 || self.n_x == 0 || self.n_t == 0 || self.p < 2 || self.label_cap == 0 {
            return bad("n_customers, n_x, n_t and label_cap must be positive and p at least 2");
        }
        if self.n <= self.p {
            return bad("need n > p");
        }
        if self.method.csaa_count == 0 {
            return bad("csaa_count must be positive");
        }
        if self.time_limit.is_some_and(|t| !(t > 0.0)) {
            return bad("time_limit must be positive");
        }
        Ok(())
    }

    pub fn solver(&self) -> SolverConfig {
        let mut s = SolverConfig {
            time_limit: self.time_limit,
            node_limit: self.node_limit,
            ..SolverConfig::default()
        };
        s.pricing.label_cap = self.label_cap;
        s
    }
}

/// Loads a built-in Solomon instance or a Solomon file and keeps the first
/// `n_customers` customers.
pub fn load_instance(name: &str, n_customers: usize) -> Result<Instance> {
    let full = match solomon::builtin(name) {
        Ok(i) => i,
        Err(_) if Path::new(name).exists() => solomon::parse_solomon(&std::fs::read_to_string(name)?)?,
        Err(e) => return Err(e),
    };
    full.truncate(n_customers)
}

/// One method's evaluation on one (instance, model, seed) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub instance: String,
    pub n_customers: usize,
    pub model: ModelKind,
    pub seed: u64,
    pub method: Method,
    pub test_cost: f64,
    pub first_stage: f64,
    pub second_stage: f64,
    /// Full-information gap in percent.
    pub gap: f64,
    /// Largest solver gap over the method's prescriptions.
    pub solve_gap: f64,
    pub full_solve_gap: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PrescriptionSummary {
    pub method: Method,
    pub x_index: usize,
    pub fingerprint: String,
    pub report: SolveReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellResult {
    pub instance: String,
    pub model: ModelKind,
    pub seed: u64,
    pub rows: Vec<ResultRow>,
    pub prescriptions: Vec<PrescriptionSummary>,
    pub wall_time: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
}

impl ExperimentOutcome {
    pub fn rows(&self) -> Vec<ResultRow> {
        self.cells.iter().flat_map(|c| c.rows.iter().cloned()).collect()
    }

    /// `results.csv` (deterministic) and `results.json` (with timings).
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join("results.csv"), &self.rows())?;
        std::fs::write(dir.join("results.json"), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Methods solved in a cell: the requested ones, Full, and the P-NN donors.
fn solve_order(requested: &[Method]) -> Vec<Method> {
    let mut need: Vec<Method> = requested.to_vec();
    need.push(Method::Full);
    if requested.contains(&Method::Pnn) {
        need.extend([Method::DAvg, Method::Saa]);
    }
    // donors come before P-NN in the roster order
    Method::ALL.into_iter().filter(|m| need.contains(m)).collect()
}

pub fn run_cell(cfg: &ExperimentConfig, instance: &str, kind: ModelKind, seed: u64) -> Result<CellResult> {
    let start = Instant::now();
    let inst = load_instance(instance, cfg.n_customers)?;
    let model = GenerativeModel::new(kind, &inst, cfg.p - 1, rng::mix(seed, 1))?;
    let data = make_dataset(&model, &inst, cfg.n, cfg.p, rng::mix(seed, 2))?;
    let test = make_testset(&model, &inst, cfg.n_x, cfg.n_t, rng::mix(seed, 3))?;
    let mcfg = MethodConfig {
        seed: rng::mix(seed, cfg.method.seed ^ 4),
        ..cfg.method.clone()
    };
    let solver = cfg.solver();
    let trained = Trained::fit(&inst, &data, &mcfg)?;
    let order = solve_order(&cfg.methods);
    let mut by_method: BTreeMap<Method, Vec<Prescription>> = BTreeMap::new();
    for point in &test.points {
        for &m in &order {
            let p = if m == Method::Pnn {
                let donors: Vec<Prescription> = [Method::DAvg, Method::Saa]
                    .iter()
                    .map(|d| by_method[d].last().expect("donor solved first").clone())
                    .collect();
                pnn_pipeline(&trained, &point.x, &cfg.penalty, &donors, &mcfg, &solver)?
            } else {
                prescribe(m, &trained, &point.x, &cfg.penalty, Some(point), &mcfg, &solver)?
            };
            by_method.entry(m).or_default().push(p);
        }
    }
    let cost = |m: Method| {
        let sols: Vec<_> = by_method[&m].iter().map(|p| Some(&p.solution)).collect();
        evaluate_test_cost(&sols, &test, &inst, &cfg.penalty)
    };
    let solve_gap = |m: Method| by_method[&m].iter().map(|p| p.report.gap).fold(0.0, f64::max);
    let full = cost(Method::Full)?;
    let mut rows = Vec::new();
    for m in Method::ALL.into_iter().filter(|m| cfg.methods.contains(m) || *m == Method::Full) {
        let c = cost(m)?;
        rows.push(ResultRow {
            instance: inst.name().to_string(),
            n_customers: inst.n_customers(),
            model: kind,
            seed,
            method: m,
            test_cost: c.total,
            first_stage: c.first_stage,
            second_stage: c.second_stage,
            gap: full_info_gap(c.total, full.total)?,
            solve_gap: solve_gap(m),
            full_solve_gap: solve_gap(Method::Full),
        });
    }
    let prescriptions = by_method
        .iter()
        .flat_map(|(m, ps)| {
            ps.iter().enumerate().map(move |(k, p)| PrescriptionSummary {
                method: *m,
                x_index: k,
                fingerprint: p.solution.fingerprint(),
                report: p.report.clone(),
            })
        })
        .collect();
    let wall_time = start.elapsed().as_secs_f64();
    info!("{} {kind} seed {seed}: {} rows in {wall_time:.1}s", inst.name(), rows.len());
    Ok(CellResult {
        instance: inst.name().to_string(),
        model: kind,
        seed,
        rows,
        prescriptions,
        wall_time,
    })
}

/// Runs every (instance, model, seed) cell on the rayon pool; cells come back
/// in grid order regardless of scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let grid: Vec<(&str, ModelKind, u64)> = cfg
        .instances
        .iter()
        .flat_map(|i| cfg.models.iter().flat_map(move |&k| cfg.seeds.iter().map(move |&s| (i.as_str(), k, s))))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(i, k, s)| run_cell(cfg, i, k, s))
        .collect::<Result<Vec<_>>>()?;
    let out = ExperimentOutcome {
        config: cfg.clone(),
        cells,
    };
    if let Some(dir) = &cfg.out_dir {
        out.write(dir)?;
    }
    Ok(out)
}

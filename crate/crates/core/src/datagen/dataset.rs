use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{GenerativeModel, ModelKind};
use crate::error::{Error, Result};
use crate::problem::{Instance, TravelTimes};
use crate::rng;

/// Historical observations: features `X` (`n x p`, first column ones) and
/// travel times `T` (`n x |A|`, arcs in row-major order).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(with = "crate::learn::matrix_serde")]
    pub x: DMatrix<f64>,
    #[serde(with = "crate::learn::matrix_serde")]
    pub t: DMatrix<f64>,
    pub kind: ModelKind,
    pub seed: u64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn row_features(&self, k: usize) -> Vec<f64> {
        self.x.row(k).iter().copied().collect()
    }

    pub fn row_times(&self, k: usize) -> Vec<f64> {
        self.t.row(k).iter().copied().collect()
    }

    /// Writes `X.csv`, `T.csv` and `manifest.json` into `dir`.
    pub fn write_dir(&self, inst: &Instance, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let x_header: Vec<String> = (1..=self.p()).map(|j| format!("x{j}")).collect();
        write_matrix(&dir.join("X.csv"), &x_header, &self.x)?;
        let t_header: Vec<String> = inst.arcs().pairs().iter().map(|(i, j)| format!("{i}-{j}")).collect();
        write_matrix(&dir.join("T.csv"), &t_header, &self.t)?;
        let manifest = serde_json::json!({
            "instance": inst.name(),
            "model": self.kind,
            "seed": self.seed,
            "n": self.n(),
            "p": self.p(),
            "arcs": inst.arcs().len(),
        });
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }
}

fn write_matrix(path: &Path, header: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in 0..m.nrows() {
        w.write_record(m.row(r).iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One test context: its features (with intercept) and `n_T` realizations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestPoint {
    pub x: Vec<f64>,
    pub realizations: Vec<TravelTimes>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub points: Vec<TestPoint>,
    pub kind: ModelKind,
    pub seed: u64,
}

fn check_arcs(model: &GenerativeModel, inst: &Instance) -> Result<()> {
    if model.n_arcs() != inst.arcs().len() {
        return Err(Error::Dimension(format!(
            "model covers {} arcs, instance has {}",
            model.n_arcs(),
            inst.arcs().len()
        )));
    }
    Ok(())
}

/// Prepends the intercept.
pub fn with_intercept(raw: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(raw.len() + 1);
    x.push(1.0);
    x.extend_from_slice(raw);
    x
}

pub fn make_dataset(model: &GenerativeModel, inst: &Instance, n: usize, p: usize, seed: u64) -> Result<Dataset> {
    if p != model.n_raw + 1 {
        return Err(Error::Dimension(format!(
            "dataset has p = {p} columns but the model uses {} raw features plus an intercept",
            model.n_raw
        )));
    }
    if n <= p {
        return Err(Error::Dimension(format!("need more observations than features, got n = {n}, p = {p}")));
    }
    check_arcs(model, inst)?;
    let mut rng = rng::stream(seed, 0xDA);
    let m = model.n_arcs();
    let mut x = DMatrix::zeros(n, p);
    let mut t = DMatrix::zeros(n, m);
    for k in 0..n {
        let raw = model.sample_features(&mut rng);
        x[(k, 0)] = 1.0;
        for (j, v) in raw.iter().enumerate() {
            x[(k, j + 1)] = *v;
        }
        for (a, v) in model.sample_arcs(&raw, &mut rng)?.into_iter().enumerate() {
            t[(k, a)] = v;
        }
    }
    Ok(Dataset {
        x,
        t,
        kind: model.kind,
        seed,
    })
}

pub fn make_testset(model: &GenerativeModel, inst: &Instance, n_x: usize, n_t: usize, seed: u64) -> Result<TestSet> {
    if n_x == 0 || n_t == 0 {
        return Err(Error::Dimension("test set sizes must be positive".into()));
    }
    check_arcs(model, inst)?;
    let mut rng = rng::stream(seed, 0x7E);
    let mut points = Vec::with_capacity(n_x);
    for _ in 0..n_x {
        let raw = model.sample_features(&mut rng);
        let realizations = (0..n_t)
            .map(|_| model.sample(inst, &raw, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        points.push(TestPoint {
            x: with_intercept(&raw),
            realizations,
        });
    }
    Ok(TestSet {
        points,
        kind: model.kind,
        seed,
    })
}

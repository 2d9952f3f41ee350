use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Instance, TravelTimes};
use crate::rng::{self, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Exponential,
    Sigmoidal,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Linear, ModelKind::Exponential, ModelKind::Sigmoidal];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Exponential => "exponential",
            ModelKind::Sigmoidal => "sigmoidal",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "exponential" | "exp" => Ok(ModelKind::Exponential),
            "sigmoidal" | "sigmoid" => Ok(ModelKind::Sigmoidal),
            other => Err(Error::Config(format!("unknown generative model '{other}'"))),
        }
    }
}

/// Default per-arc noise standard deviation of the linear model, as a
/// fraction of the nominal time.
pub const LINEAR_NOISE_SCALE: f64 = 0.1;
pub const EXPONENTIAL_SIGMA: f64 = 1.0;
pub const SIGMOIDAL_SIGMA: f64 = 1.2;

/// Low-rank-plus-diagonal factor of the linear-model noise covariance:
/// `eps_a = scale_a * (sum_l F[a][l] z_l + sqrt(0.5) w_a)` with standard
/// normal `z` and `w`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseFactor {
    pub scale: Vec<f64>,
    pub rank: usize,
    /// Sparse rows of `F`, one per arc.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub seeds: Vec<usize>,
}

impl NoiseFactor {
    /// Node-clustered factor: `r = ceil(|A| / 10)` clusters, each with a random
    /// seed node; arcs touching a cluster's seed load on it with a `U(0,1)` weight.
    pub fn build(inst: &Instance, noise_scale: f64, seed: u64) -> Self {
        let arcs = inst.arcs();
        let m = arcs.len();
        let rank = m.div_ceil(10).max(1);
        let mut rng = rng::stream(seed, 0xC0);
        let seeds: Vec<usize> = (0..rank).map(|_| rng.gen_range(0..inst.n_nodes())).collect();
        let mut rows = Vec::with_capacity(m);
        let mut scale = Vec::with_capacity(m);
        for &(i, j) in arcs.pairs() {
            let row: Vec<(usize, f64)> = seeds
                .iter()
                .enumerate()
                .filter(|&(_, &s)| s == i || s == j)
                .map(|(l, _)| (l, rng.gen::<f64>()))
                .collect();
            let diag: f64 = row.iter().map(|(_, v)| v * v).sum::<f64>() + 0.5;
            scale.push(noise_scale * inst.nominal().get(i, j) / diag.sqrt());
            rows.push(row);
        }
        Self { scale, rank, rows, seeds }
    }

    pub fn draw(&self, rng: &mut Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..self.rank).map(|_| StandardNormal.sample(rng)).collect();
        let half = 0.5_f64.sqrt();
        self.rows
            .iter()
            .zip(&self.scale)
            .map(|(row, s)| {
                let w: f64 = StandardNormal.sample(rng);
                s * (row.iter().map(|&(l, v)| v * z[l]).sum::<f64>() + half * w)
            })
            .collect()
    }

    /// Dense covariance `Sigma = D C D`.
    pub fn covariance(&self) -> DMatrix<f64> {
        let m = self.rows.len();
        let mut dense = vec![vec![0.0; self.rank]; m];
        for (a, row) in self.rows.iter().enumerate() {
            for &(l, v) in row {
                dense[a][l] = v;
            }
        }
        DMatrix::from_fn(m, m, |a, b| {
            let mut s: f64 = dense[a].iter().zip(&dense[b]).map(|(x, y)| x * y).sum();
            if a == b {
                s += 0.5;
            }
            self.scale[a] * self.scale[b] * s
        })
    }
}

/// Covariance of the linear-model noise at the default 10% scale.
pub fn build_covariance(inst: &Instance, seed: u64) -> DMatrix<f64> {
    NoiseFactor::build(inst, LINEAR_NOISE_SCALE, seed).covariance()
}

/// A feature-conditioned travel-time distribution over the arcs of an instance.
///
/// The model acts on `d` raw features; datasets prepend an intercept column,
/// so their feature dimension is `p = d + 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerativeModel {
    pub kind: ModelKind,
    pub n_raw: usize,
    pub seed: u64,
    /// Nominal arc times in arc order.
    pub nominal: Vec<f64>,
    /// Coefficients, `n_raw` values per arc (arc-major).
    pub b: Vec<f64>,
    pub noise: Option<NoiseFactor>,
    pub sigma: f64,
}

impl GenerativeModel {
    pub fn new(kind: ModelKind, inst: &Instance, n_raw: usize, seed: u64) -> Result<Self> {
        if n_raw == 0 {
            return Err(Error::Dimension("generative model needs at least one feature".into()));
        }
        let nominal = inst.nominal().to_arc_vector(inst.arcs());
        let mut rng = rng::stream(seed, 0xB0);
        let mut b = Vec::with_capacity(nominal.len() * n_raw);
        for &t in &nominal {
            for _ in 0..n_raw {
                let v = match kind {
                    ModelKind::Linear => rng.gen_range(0.01..=0.2) * t,
                    ModelKind::Exponential => signed(&mut rng, 0.1, 0.3),
                    ModelKind::Sigmoidal => signed(&mut rng, 0.3, 0.8),
                };
                b.push(v);
            }
        }
        let (noise, sigma) = match kind {
            ModelKind::Linear => (Some(NoiseFactor::build(inst, LINEAR_NOISE_SCALE, seed)), 0.0),
            ModelKind::Exponential => (None, EXPONENTIAL_SIGMA),
            ModelKind::Sigmoidal => (None, SIGMOIDAL_SIGMA),
        };
        Ok(Self {
            kind,
            n_raw,
            seed,
            nominal,
            b,
            noise,
            sigma,
        })
    }

    pub fn n_arcs(&self) -> usize {
        self.nominal.len()
    }

    pub fn coef(&self, arc: usize) -> &[f64] {
        &self.b[arc * self.n_raw..(arc + 1) * self.n_raw]
    }

    /// Draws a raw feature vector from the model's feature distribution.
    pub fn sample_features(&self, rng: &mut Rng) -> Vec<f64> {
        (0..self.n_raw)
            .map(|_| match self.kind {
                ModelKind::Linear => {
                    if rng.gen_bool(0.5) {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => rng.gen::<f64>(),
            })
            .collect()
    }

    fn check_features(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_raw {
            return Err(Error::Dimension(format!("expected {} features, got {}", self.n_raw, x.len())));
        }
        match self.kind {
            ModelKind::Linear => {
                if x.iter().any(|&v| v != 0.0 && v != 1.0) {
                    return Err(Error::Domain("linear model features must be binary".into()));
                }
            }
            _ => {
                if x.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                    return Err(Error::Domain("features must lie in the unit cube".into()));
                }
            }
        }
        Ok(())
    }

    /// Travel times with the noise term suppressed (before truncation).
    pub fn deterministic(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_features(x)?;
        Ok((0..self.n_arcs())
            .map(|a| {
                let t = self.nominal[a];
                let bx: f64 = self.coef(a).iter().zip(x).map(|(b, x)| b * x).sum();
                match self.kind {
                    ModelKind::Linear => t + bx,
                    ModelKind::Exponential => t + 0.2 * t * (2.0 * bx).exp(),
                    ModelKind::Sigmoidal => {
                        let half: f64 = 0.5 * self.coef(a).iter().sum::<f64>();
                        t + t * logistic(32.0 * (half - bx))
                    }
                }
            })
            .collect())
    }

    /// Deterministic part plus a noise draw, without the linear-model truncation.
    pub fn sample_untruncated(&self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let mut t = self.deterministic(x)?;
        match &self.noise {
            Some(f) => {
                for (v, e) in t.iter_mut().zip(f.draw(rng)) {
                    *v += e;
                }
            }
            None => {
                for v in t.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v += (self.sigma * z).exp();
                }
            }
        }
        Ok(t)
    }

    /// One travel-time realization in arc order, never below nominal.
    pub fn sample_arcs(&self, x: &[f64], rng: &mut Rng) -> Result<Vec<f64>> {
        let mut t = self.sample_untruncated(x, rng)?;
        for (v, &floor) in t.iter_mut().zip(&self.nominal) {
            if *v < floor {
                *v = floor;
            }
        }
        Ok(t)
    }

    pub fn sample(&self, inst: &Instance, x: &[f64], rng: &mut Rng) -> Result<TravelTimes> {
        TravelTimes::from_arc_vector(inst.arcs(), &self.sample_arcs(x, rng)?)
    }
}

fn signed(rng: &mut Rng, lo: f64, hi: f64) -> f64 {
    let v = rng.gen_range(lo..=hi);
    if rng.gen_bool(0.2) {
        -v
    } else {
        v
    }
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense `(N+1) x (N+1)` matrix of arc travel times, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TravelTimes {
    n: usize,
    data: Vec<f64>,
}

impl TravelTimes {
    pub fn zeros(n_nodes: usize) -> Self {
        Self {
            n: n_nodes,
            data: vec![0.0; n_nodes * n_nodes],
        }
    }

    /// Builds from a row-major buffer. Entries must be finite and nonnegative
    /// with a zero diagonal.
    pub fn from_row_major(n_nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_nodes * n_nodes {
            return Err(Error::Dimension(format!(
                "expected {} travel times, got {}",
                n_nodes * n_nodes,
                data.len()
            )));
        }
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                let v = data[i * n_nodes + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Validation(format!("travel time t[{i}][{j}] = {v}")));
                }
                if i == j && v != 0.0 {
                    return Err(Error::Validation(format!("nonzero diagonal t[{i}][{i}] = {v}")));
                }
            }
        }
        Ok(Self { n: n_nodes, data })
    }

    /// Rebuilds a matrix from a per-arc vector laid out by [`ArcIndex`].
    pub fn from_arc_vector(arcs: &ArcIndex, values: &[f64]) -> Result<Self> {
        if values.len() != arcs.len() {
            return Err(Error::Dimension(format!(
                "expected {} arc values, got {}",
                arcs.len(),
                values.len()
            )));
        }
        let mut t = Self::zeros(arcs.n_nodes());
        for (a, &(i, j)) in arcs.pairs().iter().enumerate() {
            t.data[i * t.n + j] = values[a];
        }
        for (a, v) in values.iter().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                let (i, j) = arcs.pair(a);
                return Err(Error::Validation(format!("travel time t[{i}][{j}] = {v}")));
            }
        }
        Ok(t)
    }

    pub fn to_arc_vector(&self, arcs: &ArcIndex) -> Vec<f64> {
        arcs.pairs().iter().map(|&(i, j)| self.get(i, j)).collect()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Entrywise maximum with `floor`.
    pub fn clamp_below(&mut self, floor: &TravelTimes) {
        for (v, f) in self.data.iter_mut().zip(&floor.data) {
            if *v < *f {
                *v = *f;
            }
        }
    }

    /// Entrywise mean of a non-empty collection.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a TravelTimes>) -> Option<TravelTimes> {
        let mut it = items.into_iter();
        let first = it.next()?;
        let mut acc = first.data.clone();
        let mut count = 1usize;
        for t in it {
            for (a, v) in acc.iter_mut().zip(&t.data) {
                *a += v;
            }
            count += 1;
        }
        let inv = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Some(TravelTimes { n: first.n, data: acc })
    }
}

/// Enumerates the off-diagonal arcs `(i, j)`, `i != j`, row-major by `(i, j)`.
///
/// This is the column order of every arc-indexed vector in the crate
/// (training matrices, regression coefficients, covariance matrices).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcIndex {
    n: usize,
    pairs: Vec<(usize, usize)>,
}

impl ArcIndex {
    pub fn new(n_nodes: usize) -> Self {
        let mut pairs = Vec::with_capacity(n_nodes * n_nodes.saturating_sub(1));
        for i in 0..n_nodes {
            for j in 0..n_nodes {
                if i != j {
                    pairs.push((i, j));
                }
            }
        }
        Self { n: n_nodes, pairs }
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn pair(&self, a: usize) -> (usize, usize) {
        self.pairs[a]
    }

    /// Column of arc `(i, j)`; panics on the diagonal.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        assert!(i != j, "diagonal arcs are not indexed");
        i * (self.n - 1) + if j < i { j } else { j - 1 }
    }
}

use serde::{Deserialize, Serialize};

use super::{ArcMask, Duals};
use crate::problem::{Instance, PenaltyFn, TravelTimes};

/// How the time index moves along an arc inside the RCSP recursion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundVariant {
    /// Same time index at the successor; penalty `pi(delta - l_j)`.
    Verbatim,
    /// Successor indexed at the floor of `max(e_j, delta + tmin_ij)`; penalty
    /// `pi(delta + tmin_ij - l_j)`.
    #[default]
    Tightened,
}

/// Completion-bound table `T1[delta, i, q]` over a time grid, with 2-cycle
/// elimination. Entries are the cheapest relaxed completion from `i`
/// (including the return to the depot) when leaving `i` no earlier than
/// `delta` with remaining capacity `q`.
#[derive(Clone, Debug)]
pub struct RcspBound {
    n: usize,
    layers: usize,
    dt: f64,
    unit: u32,
    qcap: usize,
    t1: Vec<f64>,
    enabled: bool,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl RcspBound {
    /// `steps` grid intervals over `[0, l_max]`; a single layer when `pen` is `None`.
    pub fn build(
        inst: &Instance,
        duals: &Duals,
        mask: &ArcMask,
        pen: Option<&PenaltyFn>,
        tmin: &TravelTimes,
        steps: usize,
        variant: BoundVariant,
    ) -> Self {
        let n = inst.n_nodes();
        let demands: Vec<u32> = (0..n).map(|i| inst.demand(i)).collect();
        if inst.customers().any(|j| demands[j] == 0) || n < 2 {
            return Self {
                n,
                layers: 0,
                dt: 1.0,
                unit: 1,
                qcap: 0,
                t1: Vec::new(),
                enabled: false,
            };
        }
        let unit = inst.customers().map(|j| demands[j]).fold(0, gcd).max(1);
        let total: u32 = inst.customers().map(|j| demands[j] / unit).sum();
        let qcap = ((inst.capacity() / unit).min(total)) as usize;
        let w: Vec<usize> = demands.iter().map(|d| (d / unit) as usize).collect();

        let l_max = inst.customers().map(|j| inst.due(j)).fold(0.0, f64::max);
        let steps = if pen.is_some() && l_max > 0.0 { steps.max(1) } else { 0 };
        let layers = steps + 1;
        let dt = if steps > 0 { l_max / steps as f64 } else { 1.0 };
        let stride_i = qcap + 1;
        let stride_l = n * stride_i;
        let mut t1 = vec![f64::INFINITY; layers * stride_l];
        let mut t2 = vec![f64::INFINITY; layers * stride_l];
        let mut next = vec![0usize; layers * stride_l];
        let layer_of = |t: f64| -> usize {
            if steps == 0 {
                0
            } else {
                ((t / dt).floor().max(0.0) as usize).min(steps)
            }
        };

        for l in (0..layers).rev() {
            let delta = l as f64 * dt;
            let base = l * stride_l;
            for q in 0..=qcap {
                t1[base + q] = 0.0;
            }
            for i in inst.customers() {
                if mask.allows(i, 0) {
                    t1[base + i * stride_i] = inst.cost(i, 0);
                }
            }
            for q in 1..=qcap {
                for i in inst.customers() {
                    let at = base + i * stride_i + q;
                    let (mut b1, mut b2, mut nx) = (t1[at - 1], t2[at - 1], next[at - 1]);
                    for j in inst.customers() {
                        if j == i || w[j] > q || !mask.allows(i, j) {
                            continue;
                        }
                        let (penalty, lj) = match (pen, variant) {
                            (None, _) => (0.0, l),
                            (Some(p), BoundVariant::Verbatim) => (p.eval(delta - inst.due(j)), l),
                            (Some(p), BoundVariant::Tightened) => {
                                let arr = delta + tmin.get(i, j);
                                (p.eval(arr - inst.due(j)), layer_of(arr.max(inst.ready(j))).max(l))
                            }
                        };
                        let look = lj * stride_l + j * stride_i + q - w[j];
                        let tail = if next[look] != i { t1[look] } else { t2[look] };
                        if !tail.is_finite() {
                            continue;
                        }
                        let v = inst.cost(i, j) - duals.gamma[j] + tail + penalty;
                        if v < b1 {
                            b2 = b1;
                            b1 = v;
                            nx = j;
                        } else if v < b2 {
                            b2 = v;
                        }
                    }
                    t1[at] = b1;
                    t2[at] = b2;
                    next[at] = nx;
                }
            }
        }
        Self {
            n,
            layers,
            dt,
            unit,
            qcap,
            t1,
            enabled: true,
        }
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Raw table entry at grid layer `l`, node `i`, remaining capacity `rem` (original units).
    pub fn entry(&self, l: usize, i: usize, rem: u32) -> f64 {
        let q = ((rem / self.unit) as usize).min(self.qcap);
        self.t1[l * self.n * (self.qcap + 1) + i * (self.qcap + 1) + q]
    }

    /// Lower bound on the reduced-cost change of completing a path that ends
    /// at `i` with earliest service start `tau` and remaining capacity `rem`.
    pub fn bound(&self, inst: &Instance, i: usize, tau: f64, rem: u32) -> f64 {
        if !self.enabled {
            return f64::NEG_INFINITY;
        }
        let l = if self.layers == 1 {
            0
        } else {
            ((tau / self.dt).floor().max(0.0) as usize).min(self.layers - 1)
        };
        self.entry(l, i, rem) - inst.cost(i, 0)
    }
}

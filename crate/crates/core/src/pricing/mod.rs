//! Labeling algorithm for the elementary pricing problems with completion
//! bounds, for scenario-based and learned late-arrival penalties.

mod knapsack;
mod objective;
mod rcsp;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Instance, Route};

pub use knapsack::knapsack_bound;
pub use objective::{LearnedObjective, LearnedState, Objective, ScenarioObjective, TimeBounds};
pub use rcsp::{BoundVariant, RcspBound};

/// Largest customer id the visited-set bitset can hold.
pub const MAX_CUSTOMERS: usize = 127;

/// Duals of the restricted master: `gamma[j]` per customer row (entry 0
/// unused) and `mu <= 0` for the fleet row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Duals {
    pub gamma: Vec<f64>,
    pub mu: f64,
}

impl Duals {
    pub fn zero(inst: &Instance) -> Self {
        Self {
            gamma: vec![0.0; inst.n_nodes()],
            mu: 0.0,
        }
    }
}

/// Arcs usable under the current branching decisions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArcMask {
    n: usize,
    allowed: Vec<bool>,
}

impl ArcMask {
    pub fn all(n_nodes: usize) -> Self {
        Self {
            n: n_nodes,
            allowed: vec![true; n_nodes * n_nodes],
        }
    }

    #[inline]
    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.allowed[i * self.n + j]
    }

    pub fn forbid(&mut self, i: usize, j: usize) {
        self.allowed[i * self.n + j] = false;
    }

    /// Every consecutive arc of the route (depot legs included) is allowed.
    pub fn admits(&self, route: &Route) -> bool {
        route.arcs().all(|(i, j)| self.allows(i, j))
    }

    pub fn n_forbidden(&self) -> usize {
        self.allowed.iter().filter(|a| !**a).count()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PricingConfig {
    /// Routes returned per call (the most negative ones).
    pub max_routes: usize,
    /// Number of time-grid intervals of the RCSP bound.
    pub time_steps: usize,
    pub variant: BoundVariant,
    pub use_rcsp: bool,
    pub use_knapsack: bool,
    /// Live-label cap; exceeding it aborts with `PricingExhausted`.
    pub label_cap: usize,
    /// A route is reported only if its reduced cost is below `-eps`.
    pub eps: f64,
}

impl Default for PricingConfig {
    fn default() -> Self {
        Self {
            max_routes: 30,
            time_steps: 40,
            variant: BoundVariant::Tightened,
            use_rcsp: true,
            use_knapsack: true,
            label_cap: 2_000_000,
            eps: 1e-6,
        }
    }
}

/// A priced column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PricedRoute {
    pub route: Route,
    pub reduced_cost: f64,
}

/// Label counts of one pricing call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PricingStats {
    pub created: usize,
    pub expanded: usize,
    pub pruned_rcsp: usize,
    pub pruned_knapsack: usize,
    pub max_live: usize,
    pub candidates: usize,
}

impl PricingStats {
    pub fn absorb(&mut self, o: &PricingStats) {
        self.created += o.created;
        self.expanded += o.expanded;
        self.pruned_rcsp += o.pruned_rcsp;
        self.pruned_knapsack += o.pruned_knapsack;
        self.max_live = self.max_live.max(o.max_live);
        self.candidates += o.candidates;
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PricingOutcome {
    pub routes: Vec<PricedRoute>,
    pub stats: PricingStats,
}

/// Resources of a path from the depot.
#[derive(Clone, Debug)]
pub struct PathLabel<S> {
    pub last: usize,
    pub cost: f64,
    pub load: u32,
    pub tau: f64,
    pub visited: u128,
    pub state: S,
}

struct Entry<S> {
    key: f64,
    seq: u64,
    node: u32,
    label: PathLabel<S>,
}

impl<S> PartialEq for Entry<S> {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl<S> Eq for Entry<S> {}
impl<S> PartialOrd for Entry<S> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<S> Ord for Entry<S> {
    // reversed: BinaryHeap pops the smallest key, then the oldest label
    fn cmp(&self, o: &Self) -> Ordering {
        o.key.total_cmp(&self.key).then(o.seq.cmp(&self.seq))
    }
}

struct Candidate {
    rc: f64,
    customers: Vec<usize>,
}

impl PartialEq for Candidate {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Candidate {
    fn cmp(&self, o: &Self) -> Ordering {
        self.rc.total_cmp(&o.rc).then_with(|| self.customers.cmp(&o.customers))
    }
}

/// Pricing problem for fixed duals and branching state, with bounds built.
pub struct Pricer<'a, O: Objective> {
    inst: &'a Instance,
    obj: &'a O,
    duals: &'a Duals,
    mask: &'a ArcMask,
    cfg: PricingConfig,
    rcsp: Option<RcspBound>,
}

impl<'a, O: Objective> Pricer<'a, O> {
    pub fn new(inst: &'a Instance, obj: &'a O, duals: &'a Duals, mask: &'a ArcMask, cfg: &PricingConfig) -> Result<Self> {
        if inst.n_customers() > MAX_CUSTOMERS {
            return Err(Error::Config(format!(
                "pricing supports at most {MAX_CUSTOMERS} customers, instance has {}",
                inst.n_customers()
            )));
        }
        if duals.gamma.len() != inst.n_nodes() {
            return Err(Error::Dimension(format!(
                "{} customer duals for {} nodes",
                duals.gamma.len(),
                inst.n_nodes()
            )));
        }
        let rcsp = cfg.use_rcsp.then(|| {
            RcspBound::build(
                inst,
                duals,
                mask,
                obj.bound_penalty(),
                &obj.time_bounds().arc,
                cfg.time_steps,
                cfg.variant,
            )
        });
        Ok(Self {
            inst,
            obj,
            duals,
            mask,
            cfg: cfg.clone(),
            rcsp,
        })
    }

    pub fn rcsp(&self) -> Option<&RcspBound> {
        self.rcsp.as_ref()
    }

    pub fn root(&self) -> PathLabel<O::State> {
        PathLabel {
            last: 0,
            cost: -self.duals.mu,
            load: 0,
            tau: 0.0,
            visited: 0,
            state: self.obj.root(),
        }
    }

    /// Extends along `(label.last, j)`; `None` if `j` was visited or capacity is exceeded.
    pub fn extend(&self, label: &PathLabel<O::State>, j: usize) -> Option<PathLabel<O::State>> {
        let inst = self.inst;
        let load = label.load + inst.demand(j);
        if label.visited >> j & 1 == 1 || load > inst.capacity() || j == 0 {
            return None;
        }
        let i = label.last;
        let (state, pen, tau) = self.obj.extend(&label.state, i, j);
        let cost = label.cost - inst.cost(i, 0) + inst.cost(i, j) + inst.cost(j, 0) + pen - self.duals.gamma[j];
        Some(PathLabel {
            last: j,
            cost,
            load,
            tau,
            visited: label.visited | 1u128 << j,
            state,
        })
    }

    /// Label of a customer sequence, ignoring branching restrictions.
    pub fn path_label(&self, path: &[usize]) -> Option<PathLabel<O::State>> {
        let mut l = self.root();
        for &j in path {
            l = self.extend(&l, j)?;
        }
        Some(l)
    }

    pub fn rcsp_bound(&self, l: &PathLabel<O::State>) -> f64 {
        match &self.rcsp {
            Some(b) => b.bound(self.inst, l.last, l.tau, self.inst.capacity() - l.load),
            None => f64::NEG_INFINITY,
        }
    }

    pub fn knapsack_bound(&self, l: &PathLabel<O::State>) -> f64 {
        knapsack_bound(
            self.inst,
            self.duals,
            self.obj.bound_penalty(),
            self.obj.time_bounds(),
            l.last,
            l.tau,
            self.inst.capacity() - l.load,
            l.visited,
        )
    }

    /// Reduced cost of a route recomputed from route cost, penalty and duals.
    pub fn reduced_cost(&self, route: &Route) -> f64 {
        route.cost(self.inst) + self.obj.route_penalty(route)
            - route.customers().iter().map(|&j| self.duals.gamma[j]).sum::<f64>()
            - self.duals.mu
    }

    /// Best-first labeling. Returns up to `max_routes` routes of most negative
    /// reduced cost, sorted by reduced cost then customer sequence; an empty
    /// list proves that no column prices out.
    pub fn run(&self) -> Result<PricingOutcome> {
        let inst = self.inst;
        let cfg = &self.cfg;
        let mut stats = PricingStats::default();
        let mut parents: Vec<(u32, u32)> = vec![(u32::MAX, 0)];
        let mut heap = BinaryHeap::new();
        let mut pool: BinaryHeap<Candidate> = BinaryHeap::new();
        let mut seq = 0u64;
        heap.push(Entry {
            key: f64::NEG_INFINITY,
            seq,
            node: 0,
            label: self.root(),
        });
        let threshold = |pool: &BinaryHeap<Candidate>| -> f64 {
            match pool.peek() {
                Some(w) if pool.len() >= cfg.max_routes => w.rc.min(-cfg.eps),
                _ => -cfg.eps,
            }
        };
        let path_of = |parents: &Vec<(u32, u32)>, node: u32, j: usize| -> Vec<usize> {
            let mut out = vec![j];
            let mut k = node;
            while k != 0 {
                let (p, c) = parents[k as usize];
                out.push(c as usize);
                k = p;
            }
            out.reverse();
            out
        };

        while let Some(e) = heap.pop() {
            let thr = threshold(&pool);
            if e.key >= thr {
                break;
            }
            stats.expanded += 1;
            let l = &e.label;
            for j in inst.customers() {
                if !self.mask.allows(l.last, j) {
                    continue;
                }
                let Some(nl) = self.extend(l, j) else { continue };
                stats.created += 1;
                let thr = threshold(&pool);
                if nl.cost < thr && self.mask.allows(j, 0) {
                    stats.candidates += 1;
                    pool.push(Candidate {
                        rc: nl.cost,
                        customers: path_of(&parents, e.node, j),
                    });
                    if pool.len() > cfg.max_routes {
                        pool.pop();
                    }
                }
                let thr = threshold(&pool);
                let mut bound = self.rcsp_bound(&nl);
                if nl.cost + bound >= thr {
                    stats.pruned_rcsp += 1;
                    continue;
                }
                if cfg.use_knapsack {
                    let kb = self.knapsack_bound(&nl);
                    if nl.cost + kb >= thr {
                        stats.pruned_knapsack += 1;
                        continue;
                    }
                    bound = bound.max(kb);
                }
                parents.push((e.node, j as u32));
                seq += 1;
                heap.push(Entry {
                    key: nl.cost + bound,
                    seq,
                    node: (parents.len() - 1) as u32,
                    label: nl,
                });
                if heap.len() > cfg.label_cap {
                    return Err(Error::PricingExhausted { labels: heap.len() });
                }
            }
            stats.max_live = stats.max_live.max(heap.len());
        }

        let mut routes = Vec::with_capacity(pool.len());
        for c in pool.into_sorted_vec() {
            let route = Route::try_from(c.customers)?;
            let rc = self.reduced_cost(&route);
            if (rc - c.rc).abs() > 1e-6 * (1.0 + rc.abs()) {
                log::warn!("label reduced cost {} differs from recomputed {} for {}", c.rc, rc, route);
            }
            if rc < -cfg.eps {
                routes.push(PricedRoute { route, reduced_cost: rc });
            }
        }
        routes.sort_by(|a, b| {
            a.reduced_cost
                .total_cmp(&b.reduced_cost)
                .then_with(|| a.route.customers().cmp(b.route.customers()))
        });
        Ok(PricingOutcome { routes, stats })
    }
}

/// Builds the bounds and runs one pricing call.
pub fn price<O: Objective>(
    inst: &Instance,
    obj: &O,
    duals: &Duals,
    mask: &ArcMask,
    cfg: &PricingConfig,
) -> Result<PricingOutcome> {
    Pricer::new(inst, obj, duals, mask, cfg)?.run()
}

//! Column generation over the set-partitioning master and arc branching.

mod heuristic;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Column, LpProblem, LpStatus, RowKind, Simplex, Tolerances};
use crate::pricing::{ArcMask, Duals, Objective, Pricer, PricingConfig, PricingStats};
use crate::problem::{Instance, Route, Solution};

pub use heuristic::insertion_heuristic;

/// Routes of the master problem with their cached values.
#[derive(Clone, Debug, Default)]
pub struct ColumnPool {
    routes: Vec<Route>,
    cost: Vec<f64>,
    penalty: Vec<f64>,
    index: HashMap<Vec<usize>, usize>,
}

impl ColumnPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a route unless present; returns its index and whether it was new.
    pub fn insert<O: Objective>(&mut self, inst: &Instance, obj: &O, route: Route) -> (usize, bool) {
        if let Some(&k) = self.index.get(route.customers()) {
            return (k, false);
        }
        let k = self.routes.len();
        self.index.insert(route.customers().to_vec(), k);
        self.cost.push(route.cost(inst));
        self.penalty.push(obj.route_penalty(&route));
        self.routes.push(route);
        (k, true)
    }

    pub fn len(&self) -> usize {
        self.routes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }

    pub fn route(&self, k: usize) -> &Route {
        &self.routes[k]
    }

    pub fn routes(&self) -> &[Route] {
        &self.routes
    }

    pub fn cost(&self, k: usize) -> f64 {
        self.cost[k]
    }

    pub fn penalty(&self, k: usize) -> f64 {
        self.penalty[k]
    }

    pub fn value(&self, k: usize) -> f64 {
        self.cost[k] + self.penalty[k]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub pricing: PricingConfig,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
    pub node_limit: Option<usize>,
    /// Relative gap at which the search stops.
    pub gap_tol: f64,
    pub seed_heuristic: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pricing: PricingConfig::default(),
            time_limit: Some(3600.0),
            node_limit: None,
            gap_tol: 1e-6,
            seed_heuristic: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    LimitReached,
}

/// Result of a branch-and-price run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub solution: Solution,
    pub objective: f64,
    pub lower_bound: f64,
    pub root_bound: f64,
    /// `(UB - LB) / |UB|`, clamped at 0.
    pub gap: f64,
    pub nodes: usize,
    pub cg_iterations: usize,
    pub columns: usize,
    pub abandoned_nodes: usize,
    pub pricing: PricingStats,
    pub wall_time: f64,
    /// Every route the master saw, in insertion order.
    #[serde(skip)]
    pub pool: Vec<Route>,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[derive(Clone, Debug)]
struct Node {
    id: usize,
    bound: f64,
    depth: usize,
    mask: ArcMask,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.total_cmp(&self.bound).then(o.id.cmp(&self.id))
    }
}

/// Outcome of column generation at one node.
#[derive(Clone, Debug)]
pub struct NodeLp {
    pub value: f64,
    pub duals: Duals,
    /// `(pool index, z)` for columns with positive value.
    pub support: Vec<(usize, f64)>,
    /// Total value of the big-M columns.
    pub artificial: f64,
    pub iterations: usize,
}

/// Outcome of a node solve that did not finish.
#[derive(Clone, Debug, PartialEq)]
pub enum Interrupted {
    Time,
    Exhausted,
}

/// Column generation at a node; branching restrictions are given by `mask`.
pub struct MasterProblem<'a, O: Objective> {
    inst: &'a Instance,
    obj: &'a O,
    pub pool: ColumnPool,
    big_m: f64,
    stats: PricingStats,
}

impl<'a, O: Objective> MasterProblem<'a, O> {
    pub fn new(inst: &'a Instance, obj: &'a O) -> Self {
        let mut pool = ColumnPool::new();
        for c in inst.customers() {
            pool.insert(inst, obj, Route::try_from(vec![c]).expect("singleton"));
        }
        let total: f64 = (0..pool.len()).map(|k| pool.value(k)).sum();
        Self {
            inst,
            obj,
            pool,
            big_m: (100.0 * total).max(1e5),
            stats: PricingStats::default(),
        }
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn stats(&self) -> &PricingStats {
        &self.stats
    }

    fn column(&self, k: usize) -> Column {
        let n = self.inst.n_customers();
        let mut entries: Vec<(usize, f64)> = self.pool.route(k).customers().iter().map(|&c| (c - 1, 1.0)).collect();
        entries.push((n, 1.0));
        Column::new(self.pool.value(k), 1.0, entries)
    }

    /// Runs column generation to optimality of the node LP.
    pub fn solve_node(
        &mut self,
        mask: &ArcMask,
        pricing: &PricingConfig,
        deadline: Option<Instant>,
    ) -> std::result::Result<Result<NodeLp>, Interrupted> {
        let inst = self.inst;
        let n = inst.n_customers();
        let mut lp = LpProblem::new();
        for _ in 0..n {
            lp.add_row(RowKind::Eq, 1.0);
        }
        lp.add_row(RowKind::Le, inst.fleet() as f64);
        for c in 0..n {
            lp.add_column(Column::new(self.big_m, 1.0, vec![(c, 1.0)]));
        }
        let mut cols: Vec<usize> = Vec::new();
        let mut in_lp = vec![false; self.pool.len()];
        for k in 0..self.pool.len() {
            if mask.admits(self.pool.route(k)) {
                lp.add_column(self.column(k));
                cols.push(k);
                in_lp[k] = true;
            }
        }
        let mut simplex = Simplex::new(lp, Tolerances::default());
        let mut iterations = 0;
        loop {
            iterations += 1;
            let sol = simplex.solve();
            if sol.status != LpStatus::Optimal {
                return Ok(Err(Error::Numeric(format!("master LP ended {:?}", sol.status))));
            }
            let mut gamma = vec![0.0; inst.n_nodes()];
            gamma[1..].copy_from_slice(&sol.duals[..n]);
            let duals = Duals {
                gamma,
                mu: sol.duals[n].min(0.0),
            };
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Interrupted::Time);
            }
            let pricer = match Pricer::new(inst, self.obj, &duals, mask, pricing) {
                Ok(p) => p,
                Err(e) => return Ok(Err(e)),
            };
            let out = match pricer.run() {
                Ok(o) => o,
                Err(Error::PricingExhausted { labels }) => {
                    log::debug!("pricing exhausted after {labels} labels");
                    return Err(Interrupted::Exhausted);
                }
                Err(e) => return Ok(Err(e)),
            };
            self.stats.absorb(&out.stats);
            let mut added = 0;
            for pr in out.routes {
                let (k, _) = self.pool.insert(inst, self.obj, pr.route);
                in_lp.resize(self.pool.len(), false);
                if !in_lp[k] {
                    simplex.add_column(self.column(k));
                    cols.push(k);
                    in_lp[k] = true;
                    added += 1;
                }
            }
            if added == 0 {
                let artificial = sol.primal[..n].iter().sum::<f64>();
                let support = cols
                    .iter()
                    .zip(&sol.primal[n..])
                    .filter(|(_, &z)| z > 1e-9)
                    .map(|(&k, &z)| (k, z))
                    .collect();
                return Ok(Ok(NodeLp {
                    value: sol.objective,
                    duals,
                    support,
                    artificial,
                    iterations,
                }));
            }
        }
    }
}

fn is_integral(support: &[(usize, f64)]) -> bool {
    support.iter().all(|&(_, z)| z > 1.0 - 1e-6 || z < 1e-6)
}

/// Arc whose flow is closest to 1/2; ties to the costlier arc, then the smaller pair.
fn branching_arc(inst: &Instance, pool: &ColumnPool, support: &[(usize, f64)]) -> Option<(usize, usize)> {
    let mut flow: HashMap<(usize, usize), f64> = HashMap::new();
    for &(k, z) in support {
        for a in pool.route(k).arcs() {
            *flow.entry(a).or_default() += z;
        }
    }
    let mut arcs: Vec<((usize, usize), f64)> =
        flow.into_iter().filter(|&(_, f)| (f - f.round()).abs() > 1e-6).collect();
    arcs.sort_by(|a, b| {
        let da = (a.1 - 0.5).abs();
        let db = (b.1 - 0.5).abs();
        da.total_cmp(&db)
            .then(inst.cost(b.0 .0, b.0 .1).total_cmp(&inst.cost(a.0 .0, a.0 .1)))
            .then(a.0.cmp(&b.0))
    });
    arcs.first().map(|a| a.0)
}

/// Forces arc `(i, j)`: every other arc out of `i` and into `j` is forbidden,
/// except on the depot side.
pub fn force_arc(mask: &mut ArcMask, n_nodes: usize, i: usize, j: usize) {
    for k in 0..n_nodes {
        if i != 0 && k != j && k != i {
            mask.forbid(i, k);
        }
        if j != 0 && k != i && k != j {
            mask.forbid(k, j);
        }
    }
}

/// Exact branch-and-price for the route objective `obj`.
pub fn branch_and_price<O: Objective>(inst: &Instance, obj: &O, cfg: &SolverConfig) -> Result<SolveReport> {
    branch_and_price_with(inst, obj, cfg, &[])
}

/// As [`branch_and_price`], with extra starting columns.
pub fn branch_and_price_with<O: Objective>(
    inst: &Instance,
    obj: &O,
    cfg: &SolverConfig,
    extra: &[Route],
) -> Result<SolveReport> {
    let start = Instant::now();
    let deadline = cfg.time_limit.map(|s| start + std::time::Duration::from_secs_f64(s));
    let mut master = MasterProblem::new(inst, obj);
    let mut ub = f64::INFINITY;
    let mut best: Option<Vec<usize>> = None;
    if cfg.seed_heuristic {
        let routes = insertion_heuristic(inst, obj);
        let ks: Vec<usize> = routes.into_iter().map(|r| master.pool.insert(inst, obj, r).0).collect();
        if ks.len() <= inst.fleet() {
            ub = ks.iter().map(|&k| master.pool.value(k)).sum();
            best = Some(ks);
        }
    }
    for r in extra {
        if r.check(inst).is_ok() {
            master.pool.insert(inst, obj, r.clone());
        }
    }

    let n_nodes = inst.n_nodes();
    let mut open = BinaryHeap::new();
    open.push(Node {
        id: 0,
        bound: f64::NEG_INFINITY,
        depth: 0,
        mask: ArcMask::all(n_nodes),
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut cg_iterations = 0;
    let mut root_bound = f64::NEG_INFINITY;
    let mut floor = f64::INFINITY;
    let mut abandoned = 0;
    let mut limited = false;

    let gap_of = |ub: f64, lb: f64| if ub.is_finite() { ((ub - lb) / ub.abs().max(1e-12)).max(0.0) } else { f64::INFINITY };

    while let Some(node) = open.pop() {
        if node.bound >= ub - 1e-9 {
            continue;
        }
        let lb_now = node.bound.min(floor);
        if gap_of(ub, lb_now) <= cfg.gap_tol {
            open.push(node);
            break;
        }
        if cfg.node_limit.is_some_and(|l| nodes >= l) || deadline.is_some_and(|d| Instant::now() >= d) {
            open.push(node);
            limited = true;
            break;
        }
        nodes += 1;
        let mut res = master.solve_node(&node.mask, &cfg.pricing, deadline);
        if matches!(res, Err(Interrupted::Exhausted)) && node.id != 0 {
            let finer = PricingConfig {
                time_steps: cfg.pricing.time_steps * 2,
                ..cfg.pricing.clone()
            };
            res = master.solve_node(&node.mask, &finer, deadline);
        }
        let lp = match res {
            Ok(r) => r?,
            Err(Interrupted::Time) => {
                open.push(node);
                limited = true;
                break;
            }
            Err(Interrupted::Exhausted) => {
                if node.id == 0 {
                    return Err(Error::PricingExhausted {
                        labels: cfg.pricing.label_cap,
                    });
                }
                log::warn!("abandoning node {} after pricing exhaustion", node.id);
                abandoned += 1;
                floor = floor.min(node.bound);
                continue;
            }
        };
        cg_iterations += lp.iterations;
        if node.id == 0 {
            root_bound = lp.value;
        }
        if lp.artificial > 1e-6 {
            // infeasible under this node's branching
            continue;
        }
        if lp.value >= ub - 1e-9 {
            continue;
        }
        if is_integral(&lp.support) {
            ub = lp.value;
            best = Some(lp.support.iter().filter(|s| s.1 > 0.5).map(|s| s.0).collect());
            continue;
        }
        let Some((i, j)) = branching_arc(inst, &master.pool, &lp.support) else {
            return Err(Error::Numeric("fractional master without a fractional arc".into()));
        };
        let mut off = node.mask.clone();
        off.forbid(i, j);
        let mut on = node.mask.clone();
        force_arc(&mut on, n_nodes, i, j);
        for mask in [off, on] {
            open.push(Node {
                id: next_id,
                bound: lp.value,
                depth: node.depth + 1,
                mask,
            });
            next_id += 1;
        }
    }

    let open_lb = open.iter().map(|n| n.bound).fold(f64::INFINITY, f64::min);
    let lower_bound = open_lb.min(floor).min(ub);
    let Some(ks) = best else {
        if limited || abandoned > 0 {
            return Err(Error::Infeasible("no feasible solution found within the limits".into()));
        }
        return Err(Error::Infeasible(format!(
            "no partition of the customers into at most {} routes",
            inst.fleet()
        )));
    };
    let routes: Vec<Route> = ks.iter().map(|&k| master.pool.route(k).clone()).collect();
    let first: f64 = ks.iter().map(|&k| master.pool.cost(k)).sum();
    let second: f64 = ks.iter().map(|&k| master.pool.penalty(k)).sum();
    let mut solution = Solution::new(routes);
    solution.first_stage = first;
    solution.second_stage = second;
    let gap = gap_of(ub, lower_bound);
    let status = if gap <= cfg.gap_tol && abandoned == 0 {
        SolveStatus::Optimal
    } else {
        SolveStatus::LimitReached
    };
    Ok(SolveReport {
        status,
        solution,
        objective: ub,
        lower_bound,
        root_bound,
        gap,
        nodes,
        cg_iterations,
        columns: master.pool.len(),
        abandoned_nodes: abandoned,
        pricing: *master.stats(),
        wall_time: start.elapsed().as_secs_f64(),
        pool: master.pool.routes().to_vec(),
    })
}

use crate::learn::{CovEstimate, MlpModel};
use crate::penalty_model::{EarlyArrival, FpfContext, Prefix};
use crate::problem::{Instance, PenaltyFn, Route, ScenarioSet, TravelTimes};

/// Lower bounds on travel times used by the completion bounds: per arc, and
/// along shortest paths of those arc bounds.
#[derive(Clone, Debug)]
pub struct TimeBounds {
    pub arc: TravelTimes,
    pub path: TravelTimes,
}

impl TimeBounds {
    pub fn new(arc: TravelTimes) -> Self {
        let n = arc.n_nodes();
        let mut path = arc.clone();
        for k in 0..n {
            for i in 0..n {
                let ik = path.get(i, k);
                for j in 0..n {
                    if i != j && ik + path.get(k, j) < path.get(i, j) {
                        path.set(i, j, ik + path.get(k, j));
                    }
                }
            }
        }
        Self { arc, path }
    }
}

/// How the late-arrival part of the reduced cost is charged along a path.
pub trait Objective: Sync {
    type State: Clone + Send;

    fn root(&self) -> Self::State;

    /// Appends `j` after `last`; returns the new state, the penalty charged
    /// at `j` and the earliest service start at `j`.
    fn extend(&self, state: &Self::State, last: usize, j: usize) -> (Self::State, f64, f64);

    /// Penalty function the completion bounds may apply to time lower
    /// bounds, or `None` if they must assume zero penalty.
    fn bound_penalty(&self) -> Option<&PenaltyFn>;

    fn time_bounds(&self) -> &TimeBounds;

    /// Total penalty of a complete route, recomputed from scratch.
    fn route_penalty(&self, route: &Route) -> f64;
}

/// Weighted sample-average penalty over travel-time scenarios.
pub struct ScenarioObjective<'a> {
    inst: &'a Instance,
    scen: &'a ScenarioSet,
    pen: &'a PenaltyFn,
    /// `times[(i * n + j) * m + w]` for `m` scenarios.
    times: Vec<f64>,
    weights: Vec<f64>,
    bounds: TimeBounds,
}

impl<'a> ScenarioObjective<'a> {
    pub fn new(inst: &'a Instance, scen: &'a ScenarioSet, pen: &'a PenaltyFn) -> Self {
        let n = inst.n_nodes();
        let m = scen.len();
        let mut times = vec![0.0; n * n * m];
        for (w, t) in scen.scenarios().iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    times[(i * n + j) * m + w] = t.get(i, j);
                }
            }
        }
        Self {
            inst,
            scen,
            pen,
            times,
            weights: scen.weights().to_vec(),
            bounds: TimeBounds::new(scen.min_times()),
        }
    }

    pub fn scenarios(&self) -> &ScenarioSet {
        self.scen
    }
}

impl Objective for ScenarioObjective<'_> {
    type State = Box<[f64]>;

    fn root(&self) -> Box<[f64]> {
        vec![0.0; self.weights.len()].into_boxed_slice()
    }

    fn extend(&self, s: &Box<[f64]>, last: usize, j: usize) -> (Box<[f64]>, f64, f64) {
        let n = self.inst.n_nodes();
        let m = self.weights.len();
        let base = (last * n + j) * m;
        let t = &self.times[base..base + m];
        let (ready, due) = (self.inst.ready(j), self.inst.due(j));
        let mut out = Vec::with_capacity(m);
        let mut pen = 0.0;
        let mut tau = f64::INFINITY;
        for w in 0..m {
            let a = s[w] + t[w];
            if a > due {
                pen += self.weights[w] * self.pen.eval(a - due);
            }
            let st = a.max(ready);
            tau = tau.min(st);
            out.push(st);
        }
        (out.into_boxed_slice(), pen, tau)
    }

    fn bound_penalty(&self) -> Option<&PenaltyFn> {
        Some(self.pen)
    }

    fn time_bounds(&self) -> &TimeBounds {
        &self.bounds
    }

    fn route_penalty(&self, route: &Route) -> f64 {
        self.scen.expected_penalty(route, self.pen, self.inst)
    }
}

/// Penalty predicted by a trained network on projected route features.
/// Earliest service starts are tracked over the training periods.
pub struct LearnedObjective<'a> {
    inst: &'a Instance,
    pen: &'a PenaltyFn,
    x: Vec<f64>,
    t_hat: &'a TravelTimes,
    cov: &'a CovEstimate,
    early: &'a EarlyArrival,
    mlp: &'a MlpModel,
    times: Vec<f64>,
    n_periods: usize,
    bounds: TimeBounds,
}

/// Prefix projection state plus per-period service starts.
#[derive(Clone, Debug)]
pub struct LearnedState {
    pub prefix: Prefix,
    pub starts: Box<[f64]>,
}

impl<'a> LearnedObjective<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        inst: &'a Instance,
        pen: &'a PenaltyFn,
        x: &[f64],
        t_hat: &'a TravelTimes,
        cov: &'a CovEstimate,
        early: &'a EarlyArrival,
        mlp: &'a MlpModel,
        periods: &[TravelTimes],
    ) -> Self {
        let n = inst.n_nodes();
        let m = periods.len().max(1);
        let mut times = vec![0.0; n * n * m];
        for i in 0..n {
            for j in 0..n {
                for w in 0..m {
                    times[(i * n + j) * m + w] = periods.get(w).map_or(inst.nominal().get(i, j), |t| t.get(i, j));
                }
            }
        }
        let mut min_t = inst.nominal().clone();
        for i in 0..n {
            for j in 0..n {
                let v = times[(i * n + j) * m..(i * n + j + 1) * m].iter().copied().fold(f64::INFINITY, f64::min);
                min_t.set(i, j, v);
            }
        }
        Self {
            inst,
            pen,
            x: x.to_vec(),
            t_hat,
            cov,
            early,
            mlp,
            times,
            n_periods: m,
            bounds: TimeBounds::new(min_t),
        }
    }

    pub fn context(&self) -> FpfContext<'_> {
        FpfContext {
            inst: self.inst,
            pen: self.pen,
            x: &self.x,
            t_hat: self.t_hat,
            cov: self.cov,
            early: self.early,
        }
    }
}

impl Objective for LearnedObjective<'_> {
    type State = LearnedState;

    fn root(&self) -> LearnedState {
        LearnedState {
            prefix: Prefix::depot(),
            starts: vec![0.0; self.n_periods].into_boxed_slice(),
        }
    }

    fn extend(&self, s: &LearnedState, last: usize, j: usize) -> (LearnedState, f64, f64) {
        let mut y = Vec::with_capacity(self.x.len() + 16);
        let (_, prefix) = self.context().step(&s.prefix, j, &mut y);
        let pen = self.mlp.predict(&y);
        let n = self.inst.n_nodes();
        let m = self.n_periods;
        let base = (last * n + j) * m;
        let ready = self.inst.ready(j);
        let mut tau = f64::INFINITY;
        let starts: Box<[f64]> = s
            .starts
            .iter()
            .zip(&self.times[base..base + m])
            .map(|(st, t)| {
                let v = (st + t).max(ready);
                tau = tau.min(v);
                v
            })
            .collect();
        (LearnedState { prefix, starts }, pen, tau)
    }

    fn bound_penalty(&self) -> Option<&PenaltyFn> {
        None
    }

    fn time_bounds(&self) -> &TimeBounds {
        &self.bounds
    }

    fn route_penalty(&self, route: &Route) -> f64 {
        self.context()
            .project_route(route)
            .iter()
            .map(|p| self.mlp.predict(&p.y))
            .sum()
    }
}

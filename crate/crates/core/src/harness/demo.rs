use serde::{Deserialize, Serialize};

use crate::datagen::{make_dataset, with_intercept, GenerativeModel, ModelKind, TestPoint};
use crate::error::Result;
use crate::methods::{prescribe, Method, MethodConfig, Trained};
use crate::problem::{solution_value, Instance, Node, PenaltyFn, ScenarioSet};
use crate::rng;
use crate::solver::SolverConfig;

/// Feature values at which the demo prescribes.
pub const DEMO_X: [f64; 2] = [0.28, 0.83];
pub const DEMO_SAMPLES: usize = 10;
pub const DEMO_TEST_DRAWS: usize = 50;
pub const DEMO_METHODS: [Method; 4] = [Method::DAvg, Method::Saa, Method::Csaa, Method::Full];

/// Five customers on an arc around the depot whose due dates leave a
/// single free-flow route on time but not a congested one.
pub fn demo_instance() -> Instance {
    let pts: [(f64, f64); 5] = [(10.0, 0.0), (14.0, 6.0), (10.0, 12.0), (0.0, 14.0), (-6.0, 10.0)];
    let node = |id, x, y, demand, due| Node {
        id,
        x,
        y,
        demand,
        ready: 0.0,
        due,
        service: 0.0,
    };
    let mut nodes = vec![node(0, 0.0, 0.0, 0, 1000.0)];
    let (mut at, mut prev) = (0.0f64, (0.0f64, 0.0f64));
    for (i, &(x, y)) in pts.iter().enumerate() {
        at += ((x - prev.0) * (x - prev.0) + (y - prev.1) * (y - prev.1)).sqrt();
        prev = (x, y);
        nodes.push(node(i + 1, x, y, 1, (1.25 * at + 3.0).round()));
    }
    Instance::new("demo5", nodes, 10, 3).expect("demo instance is valid")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoEntry {
    pub method: Method,
    pub x: f64,
    pub fingerprint: String,
    pub objective: f64,
    /// Cost of the prescription under the Full scenarios at the same `x`.
    pub full_info_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemoReport {
    pub seed: u64,
    pub entries: Vec<DemoEntry>,
    pub saa_identical: bool,
    pub csaa_differs: bool,
    pub csaa_matches_full: bool,
}

impl DemoReport {
    pub fn entry(&self, method: Method, x: f64) -> Option<&DemoEntry> {
        self.entries.iter().find(|e| e.method == method && e.x == x)
    }

    fn prints(&self, method: Method) -> Vec<&str> {
        DEMO_X
            .iter()
            .filter_map(|&x| self.entry(method, x).map(|e| e.fingerprint.as_str()))
            .collect()
    }

    /// SAA repeats itself, CSAA adapts, and CSAA agrees with Full at both points.
    pub fn pattern_holds(&self) -> bool {
        self.saa_identical && self.csaa_differs && self.csaa_matches_full
    }
}

/// One run of the five-customer sigmoidal example with a single continuous feature.
pub fn run_illustrative_example(seed: u64) -> Result<DemoReport> {
    let inst = demo_instance();
    let pen = PenaltyFn::Quadratic;
    let model = GenerativeModel::new(ModelKind::Sigmoidal, &inst, 1, rng::mix(seed, 1))?;
    let data = make_dataset(&model, &inst, DEMO_SAMPLES, 2, rng::mix(seed, 2))?;
    let cfg = MethodConfig {
        seed: rng::mix(seed, 3),
        ..MethodConfig::default()
    };
    let solver = SolverConfig::default();
    let trained = Trained::fit(&inst, &data, &cfg)?;
    let mut draws = rng::stream(seed, 4);
    let mut entries = Vec::new();
    for &x in &DEMO_X {
        let point = TestPoint {
            x: with_intercept(&[x]),
            realizations: (0..DEMO_TEST_DRAWS)
                .map(|_| model.sample(&inst, &[x], &mut draws))
                .collect::<Result<_>>()?,
        };
        let full = ScenarioSet::uniform(point.realizations.clone())?;
        for m in DEMO_METHODS {
            let p = prescribe(m, &trained, &point.x, &pen, Some(&point), &cfg, &solver)?;
            let mut cost = 0.0;
            for (t, w) in full.iter() {
                cost += w * solution_value(&p.solution, t, &pen, &inst)?.total();
            }
            entries.push(DemoEntry {
                method: m,
                x,
                fingerprint: p.solution.fingerprint(),
                objective: p.objective(),
                full_info_cost: cost,
            });
        }
    }
    let mut report = DemoReport {
        seed,
        entries,
        saa_identical: false,
        csaa_differs: false,
        csaa_matches_full: false,
    };
    let saa = report.prints(Method::Saa);
    let csaa = report.prints(Method::Csaa);
    let full = report.prints(Method::Full);
    let flags = (saa[0] == saa[1], csaa[0] != csaa[1], csaa == full);
    (report.saa_identical, report.csaa_differs, report.csaa_matches_full) = flags;
    Ok(report)
}

/// Runs seeds `first..first + budget` and stops at the first one showing the
/// full pattern. Returns every report produced.
pub fn search_illustrative_example(first: u64, budget: usize) -> Result<Vec<DemoReport>> {
    let mut out = Vec::new();
    for s in first..first + budget as u64 {
        let r = run_illustrative_example(s)?;
        let done = r.pattern_holds();
        out.push(r);
        if done {
            break;
        }
    }
    Ok(out)
}

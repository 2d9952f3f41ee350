//! Fixtures shared by the criterion benches.

use csvrptw::datagen::{make_testset, GenerativeModel, ModelKind};
use csvrptw::harness::load_instance;
use csvrptw::lp::{Column, LpProblem, RowKind};
use csvrptw::pricing::Duals;
use csvrptw::{Instance, PenaltyFn, Route, ScenarioSet};

/// A truncated R101 with `n_scen` linear-model realizations at one context.
pub fn scenario_fixture(n_customers: usize, n_scen: usize) -> (Instance, ScenarioSet) {
    let inst = load_instance("R101", n_customers).expect("bundled instance");
    let model = GenerativeModel::new(ModelKind::Linear, &inst, 4, 1).expect("model");
    let test = make_testset(&model, &inst, 1, n_scen, 2).expect("test set");
    let scen = ScenarioSet::uniform(test.points[0].realizations.clone()).expect("scenarios");
    (inst, scen)
}

/// Duals at a fraction of each singleton route's value, so that many routes
/// price out negatively.
pub fn singleton_duals(inst: &Instance, scen: &ScenarioSet, pen: &PenaltyFn, scale: f64) -> Duals {
    let mut d = Duals::zero(inst);
    for j in inst.customers() {
        let r = Route::new(inst, vec![j]).expect("singleton");
        d.gamma[j] = scale * (r.cost(inst) + scen.expected_penalty(&r, pen, inst));
    }
    d
}

/// Packing LP with negative costs, `<=` rows and every fifth row an equality.
/// Each equality row also gets a zero-cost column of its own, so the LP is
/// feasible. Coefficients are deterministic.
pub fn packing_lp(rows: usize, cols: usize) -> LpProblem {
    let mut p = LpProblem::new();
    for r in 0..rows {
        p.add_row(if r % 5 == 0 { RowKind::Eq } else { RowKind::Le }, 1.0 + (r % 3) as f64);
    }
    for c in 0..cols {
        let entries = (0..rows)
            .filter(|r| (r * 7 + c * 13) % 4 == 0 || r == &(c % rows))
            .map(|r| (r, 1.0 + ((r + c) % 5) as f64 * 0.25))
            .collect();
        let cost = -1.0 - ((c * 31) % 17) as f64 / 4.0;
        p.add_column(Column::new(cost, 1.0 + (c % 2) as f64, entries));
    }
    for r in (0..rows).step_by(5) {
        p.add_column(Column::new(0.0, 1.0 + (r % 3) as f64, vec![(r, 1.0)]));
    }
    p
}

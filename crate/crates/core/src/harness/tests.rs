use rand::Rng as _;

use super::*;
use crate::datagen::{ModelKind, TestPoint, TestSet};
use crate::error::Error;
use crate::methods::Method;
use crate::pricing::ScenarioObjective;
use crate::problem::fixtures::node;
use crate::problem::{Instance, PenaltyFn, Route, ScenarioSet, Solution, TravelTimes};
use crate::rng;
use crate::solver::{branch_and_price, SolverConfig};

fn test_set(points: Vec<TestPoint>) -> TestSet {
    TestSet {
        points,
        kind: ModelKind::Linear,
        seed: 0,
    }
}

fn line3() -> Instance {
    let nodes = vec![
        node(0, 0.0, 0.0, 0, 0.0, 100.0),
        node(1, 3.0, 0.0, 1, 0.0, 4.0),
        node(2, 7.0, 0.0, 1, 0.0, 8.0),
        node(3, 0.0, 5.0, 1, 0.0, 6.0),
    ];
    Instance::new("line3", nodes, 5, 3).unwrap()
}

fn scaled(inst: &Instance, f: f64) -> TravelTimes {
    let v: Vec<f64> = inst.nominal().to_arc_vector(inst.arcs()).iter().map(|t| t * f).collect();
    TravelTimes::from_arc_vector(inst.arcs(), &v).unwrap()
}

#[test]
fn single_context_without_lateness_costs_transport() {
    let inst = line3();
    let sol = Solution::new(vec![Route::new(&inst, vec![1, 2]).unwrap(), Route::new(&inst, vec![3]).unwrap()]);
    let test = test_set(vec![TestPoint {
        x: vec![1.0],
        realizations: vec![inst.nominal().clone()],
    }]);
    let c = evaluate_test_cost(&[Some(&sol)], &test, &inst, &PenaltyFn::Quadratic).unwrap();
    assert!((c.total - (14.0 + 10.0)).abs() < 1e-12);
    assert_eq!(c.second_stage, 0.0);
}

#[test]
fn hand_computed_double_sum() {
    let inst = line3();
    let sol = Solution::new(vec![Route::new(&inst, vec![1, 2]).unwrap(), Route::new(&inst, vec![3]).unwrap()]);
    // x1: factors 1 and 2; x2: factor 1.5
    let test = test_set(vec![
        TestPoint {
            x: vec![1.0],
            realizations: vec![scaled(&inst, 1.0), scaled(&inst, 2.0)],
        },
        TestPoint {
            x: vec![1.0],
            realizations: vec![scaled(&inst, 1.5)],
        },
    ]);
    let pen = PenaltyFn::Quadratic;
    // factor f: arrivals 3f, 7f, 5f against due 4, 8, 6
    let late = |f: f64| -> f64 {
        [(3.0 * f, 4.0), (7.0 * f, 8.0), (5.0 * f, 6.0)]
            .iter()
            .map(|(a, d)| (a - d).max(0.0).powi(2))
            .sum()
    };
    let q = ((late(1.0) + late(2.0)) / 2.0 + late(1.5)) / 2.0;
    assert!((late(2.0) - (4.0 + 36.0 + 16.0)).abs() < 1e-12);
    let c = evaluate_test_cost(&[Some(&sol), Some(&sol)], &test, &inst, &pen).unwrap();
    assert!((c.second_stage - q).abs() < 1e-12);
    assert!((c.first_stage - 24.0).abs() < 1e-12);
    assert!((c.total - c.first_stage - c.second_stage).abs() < 1e-12);

    // equal solutions at two contexts: mean of the per-context averages
    let a = evaluate_test_cost(&[Some(&sol)], &test_set(vec![test.points[0].clone()]), &inst, &pen).unwrap();
    let b = evaluate_test_cost(&[Some(&sol)], &test_set(vec![test.points[1].clone()]), &inst, &pen).unwrap();
    assert!((c.total - (a.total + b.total) / 2.0).abs() < 1e-12);

    assert!(matches!(
        evaluate_test_cost(&[Some(&sol), None], &test, &inst, &pen),
        Err(Error::Validation(_))
    ));
    assert!(evaluate_test_cost(&[Some(&sol)], &test, &inst, &pen).is_err());
}

#[test]
fn test_cost_ignores_ordering() {
    let inst = line3();
    let s1 = Solution::new(vec![Route::new(&inst, vec![1, 2, 3]).unwrap()]);
    let s2 = Solution::new(vec![Route::new(&inst, vec![3, 1]).unwrap(), Route::new(&inst, vec![2]).unwrap()]);
    let pts = vec![
        TestPoint {
            x: vec![1.0],
            realizations: vec![scaled(&inst, 1.1), scaled(&inst, 1.7), scaled(&inst, 1.3)],
        },
        TestPoint {
            x: vec![1.0],
            realizations: vec![scaled(&inst, 1.4), scaled(&inst, 1.0)],
        },
    ];
    let pen = PenaltyFn::Linear;
    let a = evaluate_test_cost(&[Some(&s1), Some(&s2)], &test_set(pts.clone()), &inst, &pen).unwrap();
    let mut rev: Vec<TestPoint> = pts.into_iter().rev().collect();
    rev[0].realizations.reverse();
    rev[1].realizations.reverse();
    let b = evaluate_test_cost(&[Some(&s2), Some(&s1)], &test_set(rev), &inst, &pen).unwrap();
    assert!((a.total - b.total).abs() < 1e-12);
}

#[test]
fn full_information_gap_in_percent() {
    assert_eq!(full_info_gap(50.0, 50.0).unwrap(), 0.0);
    assert!((full_info_gap(110.0, 100.0).unwrap() - 10.0).abs() < 1e-12);
    assert!(matches!(full_info_gap(1.0, 0.0), Err(Error::Domain(_))));
}

#[test]
fn oracle_small_cases() {
    let nodes = vec![node(0, 0.0, 0.0, 0, 0.0, 100.0), node(1, 3.0, 4.0, 1, 0.0, 100.0)];
    let one = Instance::new("one", nodes, 5, 1).unwrap();
    let sol = brute_force_by(&one, &|r| r.cost(&one)).unwrap();
    assert_eq!(sol.routes, vec![Route::new(&one, vec![1]).unwrap()]);

    // the joint route is penalized heavily; singletons need two vehicles
    let nodes = vec![
        node(0, 0.0, 0.0, 0, 0.0, 100.0),
        node(1, 10.0, 0.0, 1, 0.0, 10.5),
        node(2, 10.0, 1.0, 1, 0.0, 10.5),
    ];
    for k in [1, 2] {
        let inst = Instance::new("two", nodes.clone(), 5, k).unwrap();
        let scen = ScenarioSet::single(inst.nominal().clone());
        let pen = PenaltyFn::table(vec![(0.0, 0.0), (1.0, 1e4)]).unwrap();
        let obj = ScenarioObjective::new(&inst, &scen, &pen);
        let sol = brute_force_optimum(&inst, &obj).unwrap();
        // candidates: (1)+(2), (1,2), (2,1)
        let value = |v: Vec<usize>| {
            let r = Route::new(&inst, v).unwrap();
            r.cost(&inst) + scen.expected_penalty(&r, &pen, &inst)
        };
        let single = value(vec![1]) + value(vec![2]);
        let joint = |a: usize, b: usize| value(vec![a, b]);
        let best = if k >= 2 { single.min(joint(1, 2)).min(joint(2, 1)) } else { joint(1, 2).min(joint(2, 1)) };
        assert!((sol.first_stage + sol.second_stage - best).abs() < 1e-9);
        assert_eq!(sol.routes.len(), k);
    }
    let big = Instance::new("big", (0..=9).map(|i| node(i, i as f64, 0.0, u32::from(i > 0), 0.0, 100.0)).collect(), 20, 9).unwrap();
    assert!(matches!(brute_force_by(&big, &|r| r.cost(&big)), Err(Error::Config(_))));
}

#[test]
fn oracle_agrees_with_branch_and_price() {
    for seed in 0..50u64 {
        let mut r = rng::rng(500 + seed);
        let mut nodes = vec![node(0, 50.0, 50.0, 0, 0.0, 300.0)];
        for i in 1..=5 {
            let e = r.gen_range(0.0..80.0);
            nodes.push(node(i, r.gen_range(0.0..100.0), r.gen_range(0.0..100.0), r.gen_range(1..4), e, e + r.gen_range(5.0..60.0)));
        }
        let inst = Instance::new("r5", nodes, 7, 2 + (seed % 2) as usize).unwrap();
        let scen = ScenarioSet::uniform((0..2).map(|_| scaled(&inst, r.gen_range(1.0..1.5))).collect()).unwrap();
        let pen = PenaltyFn::Quadratic;
        let obj = ScenarioObjective::new(&inst, &scen, &pen);
        match (brute_force_optimum(&inst, &obj), branch_and_price(&inst, &obj, &SolverConfig::default())) {
            (Ok(o), Ok(b)) => {
                let v = o.first_stage + o.second_stage;
                assert!((v - b.objective).abs() < 1e-6 * (1.0 + v), "seed {seed}: {v} vs {}", b.objective)
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => {}
            (o, b) => panic!("seed {seed}: oracle {:?}, solver {:?}", o.map(|s| s.fingerprint()), b.map(|b| b.objective)),
        }
    }
}

fn row(instance: &str, n: usize, method: Method, seed: u64, gap: f64, cost: f64) -> ResultRow {
    ResultRow {
        instance: instance.into(),
        n_customers: n,
        model: ModelKind::Linear,
        seed,
        method,
        test_cost: cost,
        first_stage: cost / 2.0,
        second_stage: cost / 2.0,
        gap,
        solve_gap: 0.0,
        full_solve_gap: 0.0,
    }
}

#[test]
fn aggregation_matches_recomputation() {
    let rows = vec![
        row("R101-10", 10, Method::Saa, 0, 4.0, 110.0),
        row("R101-10", 10, Method::Full, 0, 0.0, 100.0),
        row("R102-10", 10, Method::Saa, 1, 8.0, 140.0),
        row("R102-10", 10, Method::Full, 1, 0.0, 130.0),
        row("RC101-10", 10, Method::Saa, 0, 1.0, 101.0),
        row("RC101-10", 10, Method::Full, 0, 0.0, 100.0),
        row("R101-15", 15, Method::Csaa, 0, 2.5, 200.0),
        row("R101-15", 15, Method::Full, 0, 0.0, 195.0),
    ];
    let table = aggregate(&rows);
    assert_eq!(table.len(), 3);
    let r10 = table.iter().find(|t| t.n_customers == 10 && t.kind == "R").unwrap();
    assert_eq!(r10.gaps[&Method::Saa], 6.0);
    assert_eq!(r10.full_abs, 115.0);
    assert!(!r10.gaps.contains_key(&Method::Full));

    let dir = tempfile::tempdir().unwrap();
    write_rows(&dir.path().join("rows.csv"), &rows).unwrap();
    assert_eq!(read_rows(&dir.path().join("rows.csv")).unwrap(), rows);
    write_table(&dir.path().join("table.csv"), &table).unwrap();
    let text = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "N,model,type,SAA,CSAA,Full (Abs.)");
    assert!(text.contains("10,linear,R,6.00,,115.00"));
}

fn tiny_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        instances: vec!["C101".into()],
        n_customers: 4,
        seeds: vec![3],
        n: 12,
        p: 3,
        n_x: 2,
        n_t: 4,
        methods: vec![Method::DAvg, Method::Saa, Method::Csaa],
        ..ExperimentConfig::default()
    };
    cfg.method.csaa_count = 5;
    cfg
}

#[test]
fn experiment_rows_are_reproducible() {
    let cfg = tiny_config();
    let dir = tempfile::tempdir().unwrap();
    let a = run_experiment(&cfg).unwrap();
    a.write(&dir.path().join("a")).unwrap();
    run_experiment(&cfg).unwrap().write(&dir.path().join("b")).unwrap();
    let read = |d: &str| std::fs::read(dir.path().join(d).join("results.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
    let rows = a.rows();
    assert_eq!(rows.len(), 4);
    let full = rows.iter().find(|r| r.method == Method::Full).unwrap();
    assert_eq!(full.gap, 0.0);
    for r in &rows {
        assert!(r.gap / 100.0 >= -(r.solve_gap + r.full_solve_gap) - 1e-9, "{:?}", r);
        assert!((r.test_cost - r.first_stage - r.second_stage).abs() < 1e-6);
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a/results.json")).unwrap()).unwrap();
    assert!(json["cells"][0]["wall_time"].is_number());
}

#[test]
fn config_parsing_and_validation() {
    let cfg = ExperimentConfig::from_toml(
        r#"
        instances = ["R101", "C101"]
        n_customers = 15
        models = ["linear", "sigmoidal"]
        seeds = [1, 2]
        n = 50
        p = 5
        methods = ["CSAA", "SAA", "D-avg"]
        penalty = { kind = "linear" }
        time_limit = 60.0

        [method]
        csaa_count = 20
        "#,
    )
    .unwrap();
    assert_eq!(cfg.models, vec![ModelKind::Linear, ModelKind::Sigmoidal]);
    assert_eq!(cfg.methods, vec![Method::Csaa, Method::Saa, Method::DAvg]);
    assert_eq!(cfg.method.csaa_count, 20);
    assert_eq!(cfg.n_t, 50);
    assert_eq!(cfg.penalty, PenaltyFn::Linear);
    assert!(matches!(ExperimentConfig::from_toml("n = 5\np = 5"), Err(Error::Config(_))));
    assert!(matches!(ExperimentConfig::from_toml("bogus = 1"), Err(Error::Config(_))));
    assert!(matches!(ExperimentConfig::from_toml("methods = [\"XYZ\"]"), Err(Error::Config(_))));
    assert!(matches!(ExperimentConfig::from_toml("models = [\"cubic\"]"), Err(Error::Config(_))));
}

#[test]
fn demo_structure() {
    let r = run_illustrative_example(0).unwrap();
    assert_eq!(r.entries.len(), DEMO_METHODS.len() * DEMO_X.len());
    assert!(r.saa_identical);
    for &x in &DEMO_X {
        let full = r.entry(Method::Full, x).unwrap();
        assert!((full.objective - full.full_info_cost).abs() < 1e-6);
        for m in DEMO_METHODS {
            assert!(r.entry(m, x).unwrap().full_info_cost >= full.objective - 1e-6);
        }
    }
}

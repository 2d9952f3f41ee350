use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use csvrptw::datagen::{make_dataset, make_testset, GenerativeModel, ModelKind};
use csvrptw::harness::{
    aggregate, brute_force_optimum, load_instance, read_rows, run_cell, run_experiment, search_illustrative_example,
    write_rows, write_table, ExperimentConfig, ResultRow,
};
use csvrptw::methods::{Method, MethodConfig, Trained};
use csvrptw::pricing::ScenarioObjective;
use csvrptw::rng;
use csvrptw::solver::branch_and_price;
use csvrptw::{Error, PenaltyFn};

const EXIT_CONFIG: u8 = 2;
const EXIT_GAP: u8 = 3;

#[derive(Parser)]
#[command(name = "csvrptw", version, about = "Contextual stochastic VRPTW solvers and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training dataset and a test set
    Gen(GenArgs),
    /// Run one method on one instance and evaluate it on a test set
    Solve(SolveArgs),
    /// Run an experiment grid from a TOML config
    Experiment(ExperimentArgs),
    /// Compare branch-and-price with exhaustive search on a small instance
    Oracle(OracleArgs),
    /// Five-customer illustrative example
    Demo(DemoArgs),
    /// Aggregate result rows into a per-method gap table
    Report(ReportArgs),
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Built-in Solomon name (R101, C101, RC101) or a Solomon file
    #[arg(long, default_value = "R101")]
    instance: String,
    #[arg(long, default_value_t = 10)]
    n_customers: usize,
    /// linear, exp or sigmoid
    #[arg(long, default_value = "linear")]
    model: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training observations
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Features including the intercept
    #[arg(long, default_value_t = 10)]
    p: usize,
    #[arg(long, default_value_t = 10)]
    n_x: usize,
    #[arg(long, default_value_t = 50)]
    n_t: usize,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value = "data")]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: String,
    /// Per-solve limit in seconds
    #[arg(long)]
    time_limit: Option<f64>,
    /// Exit with status 3 when a solve ends above this relative gap
    #[arg(long, default_value_t = 0.01)]
    gap_threshold: f64,
    #[arg(long, default_value = "solve-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `out_dir` from the config
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    gap_threshold: f64,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Scenario-based method whose objective is compared
    #[arg(long, default_value = "full")]
    method: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Seeds tried from `--seed` until the pattern appears
    #[arg(long, default_value_t = 1)]
    budget: usize,
    #[arg(long, default_value = "demo.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Experiment output directory (searched recursively for results.csv)
    #[arg(long)]
    dir: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Other(String),
    Gap(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(m) => Failure::Config(m),
            other => Failure::Other(other.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn parse_model(s: &str) -> Result<ModelKind, Failure> {
    s.parse().map_err(Failure::from)
}

fn parse_method(s: &str) -> Result<Method, Failure> {
    s.parse().map_err(Failure::from)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure::Other(e.to_string()))?;
    }
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Other(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Failure::Other(e.to_string()))
}

fn check_gaps(rows: &[ResultRow], threshold: f64) -> Outcome {
    let worst = rows.iter().map(|r| r.solve_gap).fold(0.0, f64::max);
    if worst > threshold {
        return Err(Failure::Gap(worst));
    }
    Ok(())
}

fn experiment_config(d: &DataArgs, methods: Vec<Method>) -> Result<ExperimentConfig, Failure> {
    let cfg = ExperimentConfig {
        instances: vec![d.instance.clone()],
        n_customers: d.n_customers,
        models: vec![parse_model(&d.model)?],
        seeds: vec![d.seed],
        n: d.n,
        p: d.p,
        n_x: d.n_x,
        n_t: d.n_t,
        methods,
        ..ExperimentConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn gen(a: GenArgs) -> Outcome {
    let d = &a.data;
    let kind = parse_model(&d.model)?;
    let inst = load_instance(&d.instance, d.n_customers)?;
    let model = GenerativeModel::new(kind, &inst, d.p.saturating_sub(1), rng::mix(d.seed, 1))?;
    let data = make_dataset(&model, &inst, d.n, d.p, rng::mix(d.seed, 2))?;
    let test = make_testset(&model, &inst, d.n_x, d.n_t, rng::mix(d.seed, 3))?;
    data.write_dir(&inst, &a.out)?;
    write_json(&a.out.join("instance.json"), &inst)?;
    write_json(&a.out.join("test.json"), &test)?;
    println!("wrote {} training rows and {} test contexts to {}", d.n, d.n_x, a.out.display());
    Ok(())
}

fn solve(a: SolveArgs) -> Outcome {
    let method = parse_method(&a.method)?;
    let mut cfg = experiment_config(&a.data, vec![method])?;
    if a.time_limit.is_some() {
        cfg.time_limit = a.time_limit;
    }
    cfg.validate()?;
    let kind = cfg.models[0];
    let cell = run_cell(&cfg, &a.data.instance, kind, a.data.seed)?;
    std::fs::create_dir_all(&a.out).map_err(|e| Failure::Other(e.to_string()))?;
    write_rows(&a.out.join("results.csv"), &cell.rows)?;
    write_json(&a.out.join("solve.json"), &cell)?;
    for r in &cell.rows {
        println!(
            "{:8} test cost {:.3} (first stage {:.3}, second stage {:.3}) gap {:.2}% solve gap {:.2e}",
            r.method.as_str(),
            r.test_cost,
            r.first_stage,
            r.second_stage,
            r.gap,
            r.solve_gap
        );
    }
    check_gaps(&cell.rows, a.gap_threshold)
}

fn experiment(a: ExperimentArgs) -> Outcome {
    let mut cfg = ExperimentConfig::from_file(&a.config)?;
    if let Some(out) = a.out {
        cfg.out_dir = Some(out);
    }
    if a.time_limit.is_some() {
        cfg.time_limit = a.time_limit;
    }
    if cfg.out_dir.is_none() {
        cfg.out_dir = Some(PathBuf::from("experiment-out"));
    }
    let out = run_experiment(&cfg)?;
    let rows = out.rows();
    info!("{} cells, {} rows", out.cells.len(), rows.len());
    println!("wrote {} rows to {}", rows.len(), cfg.out_dir.as_ref().unwrap().display());
    check_gaps(&rows, a.gap_threshold)
}

fn oracle(a: OracleArgs) -> Outcome {
    let method = parse_method(&a.method)?;
    if method == Method::Pnn {
        return Err(Failure::Config("the oracle compares scenario-based methods only".into()));
    }
    let d = &a.data;
    let cfg = experiment_config(d, vec![method])?;
    let inst = load_instance(&d.instance, d.n_customers)?;
    let model = GenerativeModel::new(cfg.models[0], &inst, d.p - 1, rng::mix(d.seed, 1))?;
    let data = make_dataset(&model, &inst, d.n, d.p, rng::mix(d.seed, 2))?;
    let test = make_testset(&model, &inst, 1, d.n_t, rng::mix(d.seed, 3))?;
    let mcfg = MethodConfig {
        seed: rng::mix(d.seed, 4),
        ..MethodConfig::default()
    };
    let trained = Trained::fit(&inst, &data, &mcfg)?;
    let point = &test.points[0];
    let scen = trained.scenarios(method, &point.x, Some(point), &mcfg)?;
    let pen = PenaltyFn::Quadratic;
    let obj = ScenarioObjective::new(&inst, &scen, &pen);
    let exact = brute_force_optimum(&inst, &obj)?;
    let bp = branch_and_price(&inst, &obj, &cfg.solver())?;
    let oracle_value = exact.first_stage + exact.second_stage;
    let agree = (oracle_value - bp.objective).abs() <= 1e-6 * (1.0 + oracle_value.abs());
    let summary = serde_json::json!({
        "instance": inst.name(),
        "method": method,
        "oracle": { "objective": oracle_value, "solution": exact.fingerprint() },
        "branch_and_price": { "objective": bp.objective, "solution": bp.solution.fingerprint(), "gap": bp.gap },
        "agree": agree,
    });
    println!("oracle {oracle_value:.6} branch-and-price {:.6} agree {agree}", bp.objective);
    if let Some(out) = a.out {
        write_json(&out, &summary)?;
    }
    if agree {
        Ok(())
    } else {
        Err(Failure::Other("oracle and branch-and-price disagree".into()))
    }
}

fn demo(a: DemoArgs) -> Outcome {
    let reports = search_illustrative_example(a.seed, a.budget.max(1))?;
    let last = reports.last().expect("at least one seed");
    for r in &reports {
        println!(
            "seed {}: SAA identical {} CSAA differs {} CSAA matches Full {}",
            r.seed, r.saa_identical, r.csaa_differs, r.csaa_matches_full
        );
    }
    for e in &last.entries {
        println!("  {:6} x = {:.2}  {}  objective {:.3}", e.method.as_str(), e.x, e.fingerprint, e.objective);
    }
    if reports.len() == 1 {
        write_json(&a.out, last)
    } else {
        write_json(&a.out, &reports)
    }
}

fn find_results(dir: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.path());
    for e in entries {
        let p = e.path();
        if p.is_dir() {
            find_results(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == "results.csv") {
            out.push(p);
        }
    }
    Ok(())
}

fn report(a: ReportArgs) -> Outcome {
    let mut files = Vec::new();
    find_results(&a.dir, &mut files).map_err(|e| Failure::Config(format!("{}: {e}", a.dir.display())))?;
    if files.is_empty() {
        return Err(Failure::Config(format!("no results.csv under {}", a.dir.display())));
    }
    let mut rows = Vec::new();
    for f in &files {
        rows.extend(read_rows(f)?);
    }
    let table = aggregate(&rows);
    let out = a.out.unwrap_or_else(|| a.dir.join("table.csv"));
    write_table(&out, &table)?;
    println!("aggregated {} rows from {} files into {}", rows.len(), files.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Experiment(a) => experiment(a),
        Command::Oracle(a) => oracle(a),
        Command::Demo(a) => demo(a),
        Command::Report(a) => report(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Gap(g)) => {
            eprintln!("solver stopped at relative gap {g:.3e}, above the threshold");
            ExitCode::from(EXIT_GAP)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::FAILURE
        }
    }
}

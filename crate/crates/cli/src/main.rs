use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bilevel_core::problems::dictionary::dictionary_block;
use bilevel_core::problems::load_csv;
use bilevel_core::Error;
use bilevel_harness::experiments::{
    cell_settings, default_eps_g, prepare, prepare_split, run_solver, CellConfig, Extras, Family, InstanceSpec, Prepared,
    SolverKind,
};
use bilevel_harness::persist::{persist, run_stem, RunRecord};
use bilevel_harness::suite::{load_suite, run_suite, CellStatus};
use bilevel_harness::verify::{run_group, Scale, GROUPS};
use bilevel_harness::{fairness_metrics, recovery_rate};

#[derive(Parser)]
#[command(name = "bilevel", version, about = "Conditional-gradient bilevel solver, baselines and verification suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Two-variable instance with a known solution.
    Toy(RunArgs),
    /// Over-parameterized least squares on the ℓ₁ ball.
    Regression(DataArgs),
    /// Sparse logistic regression with a covariance fairness objective.
    Fair(DataArgs),
    /// Dictionary learning with a pretrained dictionary.
    Dict(DictArgs),
    /// Invariant and oracle suites.
    Verify(VerifyArgs),
    /// Runs a JSON suite file.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated: cg-bio, cg-upper, big-sam, a-irg, dbgd, mng.
    #[arg(long = "solvers", visible_alias = "solver", value_delimiter = ',', default_value = "cg-bio")]
    solvers: Vec<String>,
    /// Sets both tolerances.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps_f: Option<f64>,
    #[arg(long)]
    eps_g: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// harmonic:c, constant:g or inv-sqrt:c0.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Record x_k in the trace.
    #[arg(long)]
    trace_iterates: bool,
    /// Write zero wall times so reruns are byte-identical.
    #[arg(long)]
    no_timing: bool,
    /// Run the full iteration budget.
    #[arg(long)]
    no_stop: bool,
}

#[derive(Args)]
struct DataArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Generator parameters such as `n=60,d=100`.
    #[arg(long, conflicts_with = "csv")]
    synthetic: Option<String>,
    /// Numeric CSV with a header row.
    #[arg(long, requires = "target")]
    csv: Option<PathBuf>,
    #[arg(long, requires = "csv")]
    target: Option<String>,
    #[arg(long, requires = "csv")]
    sensitive: Option<String>,
    /// ℓ₁ radius for CSV data.
    #[arg(long, requires = "csv")]
    radius: Option<f64>,
}

#[derive(Args)]
struct DictArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Generator parameters such as `pretrain_iters=2000`.
    #[arg(long)]
    synthetic: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Groups to run; all when omitted.
    #[arg(long = "group", value_delimiter = ',')]
    groups: Vec<String>,
    /// Also write the results to this JSON file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    file: PathBuf,
    #[arg(long, default_value = "suite-out")]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parse { .. } => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Toy(args) => run_generated("toy", None, &args),
        Command::Regression(args) => run_data(Family::Regression, args),
        Command::Fair(args) => run_data(Family::Fair, args),
        Command::Dict(args) => run_generated("dict", args.synthetic.as_deref(), &args.run),
        Command::Verify(args) => verify(&args),
        Command::Suite(args) => suite(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

impl RunArgs {
    fn solvers(&self) -> Result<Vec<SolverKind>, Failure> {
        self.solvers.iter().map(|s| SolverKind::parse(s.trim()).map_err(Failure::from)).collect()
    }

    fn cell(&self) -> CellConfig {
        CellConfig {
            eps_f: self.eps_f.or(self.eps),
            eps_g: self.eps_g.or(self.eps),
            max_iters: self.max_iters,
            schedule: self.schedule.clone(),
            stop_on_criterion: self.no_stop.then_some(false),
            record_iterates: self.trace_iterates.then_some(true),
            timing: self.no_timing.then_some(false),
        }
    }
}

fn run_generated(family: &str, params: Option<&str>, args: &RunArgs) -> Result<(), Failure> {
    let solvers = args.solvers()?;
    let id = match params {
        Some(p) if !p.is_empty() => format!("{family}:{p}"),
        _ => family.to_string(),
    };
    let spec = InstanceSpec::parse(&id, args.seed)?;
    let eps_g = args.cell().eps_g.unwrap_or_else(|| default_eps_g(spec.family()));
    let prepared = prepare(&spec, eps_g)?;
    run_all(&prepared, &solvers, eps_g, args)
}

fn run_data(family: Family, args: DataArgs) -> Result<(), Failure> {
    let name = match family {
        Family::Regression => "regression",
        _ => "fair",
    };
    let Some(path) = &args.csv else {
        return run_generated(name, args.synthetic.as_deref(), &args.run);
    };
    let solvers = args.run.solvers()?;
    let target = args.target.as_deref().expect("clap enforces --target with --csv");
    if family == Family::Fair && args.sensitive.is_none() {
        return Err(Failure::Usage("fair classification from CSV needs --sensitive".into()));
    }
    let split = load_csv(path, target, args.sensitive.as_deref(), args.run.seed)?;
    let radius = args.radius.unwrap_or(match family {
        Family::Regression => 1.0,
        _ => 100.0,
    });
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let id = format!("{name}-csv:{stem},radius={radius}");
    let eps_g = args.run.cell().eps_g.unwrap_or_else(|| default_eps_g(family));
    let prepared = prepare_split(family, id, split, radius, eps_g)?;
    run_all(&prepared, &solvers, eps_g, &args.run)
}

fn run_all(prepared: &Prepared, solvers: &[SolverKind], eps_g: f64, args: &RunArgs) -> Result<(), Failure> {
    let settings = cell_settings(prepared, eps_g, args.seed, &args.cell())?;
    println!(
        "{}: dimension {}, warm-start certificate {:e}, f* {}, g* {}",
        prepared.id,
        prepared.instance.dimension(),
        prepared.certificate,
        fmt_opt(prepared.references.f_star),
        fmt_opt(prepared.references.g_star)
    );
    let mut failed = false;
    for &solver in solvers {
        match run_one(prepared, solver, &settings, args.seed, &args.out) {
            Ok(line) => println!("{line}"),
            Err(e) => {
                failed = true;
                eprintln!("{solver}: {e}");
            }
        }
    }
    if failed {
        Err(Failure::Run("some runs failed".into()))
    } else {
        Ok(())
    }
}

fn run_one(
    prepared: &Prepared,
    solver: SolverKind,
    settings: &bilevel_harness::experiments::Settings,
    seed: u64,
    out: &Path,
) -> Result<String, Error> {
    let outcome = run_solver(prepared, solver, settings)?;
    let record = RunRecord::new(prepared, solver, settings, seed, outcome);
    let (csv, _) = persist(out, &run_stem(&prepared.id, solver, seed), &record)?;
    let last = record.outcome.last();
    let mut line = format!(
        "{solver:>8}: {} after {} iterations, f {:e}, g {:e}",
        record.outcome.stop_reason,
        record.outcome.iterations(),
        last.f_val,
        last.g_val
    );
    let summary = record.summary();
    if let Some(gap) = summary.final_g_gap {
        line += &format!(", g-gap {gap:e}");
    }
    if let Some(gap) = summary.final_f_gap {
        line += &format!(", |f − f*| {gap:e}");
    }
    let x = &record.outcome.final_point;
    match &prepared.extras {
        Extras::Split(split) if prepared.family == Family::Fair => {
            let m = fairness_metrics(x.view(), &split.test)?;
            line += &format!(", test p%-rule {:.2}, accuracy {:.4}", m.p_rule, m.accuracy);
        }
        Extras::Dictionary(data) => {
            let learned = dictionary_block(x.view(), data.truth.nrows(), data.truth.ncols());
            line += &format!(", recovery {:.3}", recovery_rate(&learned, &data.truth));
        }
        _ => {}
    }
    line += &format!(" [{}]", csv.display());
    Ok(line)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "unknown".into(), |x| format!("{x:e}"))
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let groups: Vec<String> = if args.groups.is_empty() {
        GROUPS.iter().map(|g| g.to_string()).collect()
    } else {
        args.groups.clone()
    };
    let scale = Scale::default();
    let mut all = Vec::new();
    for g in &groups {
        let checks = run_group(g, &scale)?;
        for c in &checks {
            println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        }
        all.extend(checks);
    }
    if let Some(path) = &args.out {
        let text = serde_json::to_string_pretty(&all).map_err(|e| Failure::Run(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    let failed = all.iter().filter(|c| !c.passed).count();
    println!("{} of {} checks passed", all.len() - failed, all.len());
    if failed > 0 {
        Err(Failure::Run(format!("{failed} checks failed")))
    } else {
        Ok(())
    }
}

fn suite(args: &SuiteArgs) -> Result<(), Failure> {
    let cells = load_suite(&args.file)?;
    let reports = run_suite(&cells, &args.out, args.jobs)?;
    let mut failed = 0;
    for r in &reports {
        match &r.status {
            CellStatus::Done { json, .. } => println!("done    {} [{}]", r.stem, json.display()),
            CellStatus::Skipped => println!("skipped {}", r.stem),
            CellStatus::Failed(msg) => {
                failed += 1;
                println!("failed  {}: {msg}", r.stem);
            }
        }
    }
    if failed > 0 {
        Err(Failure::Run(format!("{failed} of {} cells failed", reports.len())))
    } else {
        Ok(())
    }
}

//! Command-line front end: solve, classify, scan, find, verify, experiment.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use radial_shooter::classify::{
    classify_alpha, find_boundary, scan_csv, scan_range, ClassifyError,
};
use radial_shooter::config::{
    parse_run_config, parse_theorem_a, parse_theorem_b, Format, RunConfig,
};
use radial_shooter::experiments::{
    freeze_theorem_a, freeze_theorem_b, run_theorem_a, run_theorem_b, ExperimentError,
    ExperimentReport,
};
use radial_shooter::functionals::phase_curve;
use radial_shooter::io::write_file;
use radial_shooter::nonlinearity::{Nonlinearity, NonlinearityModel};
use radial_shooter::shooting::{integrate_alpha, ShootingError, Termination};
use radial_shooter::suites::{run_suite, Suite};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("{0}")]
    Suite(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Integration(_) => 3,
            CliError::NonConvergence(_) => 4,
            CliError::Suite(_) | CliError::Internal(_) => 5,
        }
    }
}

impl From<ShootingError> for CliError {
    fn from(e: ShootingError) -> Self {
        match e {
            ShootingError::InvalidParams(_) | ShootingError::InvalidInitialCondition(_) => {
                CliError::Config(e.to_string())
            }
            ShootingError::OutOfRange { .. } => CliError::Internal(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::InvalidConfig(_)
            | ExperimentError::PreconditionFailed(_)
            | ExperimentError::Nonlinearity(_) => CliError::Config(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "radial-shooter",
    version,
    about = "Shooting-method lab for radial bound states"
)]
struct Cli {
    /// Worker threads for scans and sweeps.
    #[arg(long, global = true, env = "RADIAL_SHOOTER_JOBS")]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one solution and write its trajectory.
    Solve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        alpha: Option<f64>,
        /// Trajectory CSV `r,u,du,I`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Phase-curve CSV `u,J,r`.
        #[arg(long)]
        phase: Option<PathBuf>,
        /// Keep every `stride`-th step point.
        #[arg(long, default_value_t = 1)]
        stride: usize,
    },
    /// Print the verdict for one initial value.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Classify a uniform grid of initial values.
    Scan {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        from: Option<f64>,
        #[arg(long)]
        to: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Converge the `k`-th bound state inside a bracket.
    Find {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long, num_args = 2, value_names = ["A", "B"])]
        bracket: Option<Vec<f64>>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a property suite on the built-in probe fixtures.
    Verify {
        #[arg(long)]
        suite: Suite,
    },
    /// Run a bound-state experiment from a JSON config.
    Experiment {
        #[arg(value_enum)]
        which: Which,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report JSON destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-cell inventory CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the witness configuration found by this run.
        #[arg(long)]
        freeze_golden: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Base run configuration (JSON); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelKind>,
    #[arg(long)]
    p: Option<f64>,
    /// Shift `a` of the shifted power.
    #[arg(long)]
    shift: Option<f64>,
    #[arg(long = "N")]
    dimension: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum ModelKind {
    PowerDiff,
    PurePower,
    ShiftedPower,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Which {
    A,
    B,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    write_file(path, contents).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn resolve(args: &ModelArgs) -> Result<RunConfig, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            parse_run_config(&read(path)?).map_err(|e| CliError::Config(e.to_string()))?
        }
        None => RunConfig::default(),
    };
    if args.model.is_some() || args.p.is_some() || args.shift.is_some() {
        let p = args.p.unwrap_or(3.0);
        cfg.model = match args.model.unwrap_or(ModelKind::PowerDiff) {
            ModelKind::PowerDiff => NonlinearityModel::PowerDifference { p },
            ModelKind::PurePower => NonlinearityModel::PurePower { p },
            ModelKind::ShiftedPower => NonlinearityModel::ShiftedPower {
                p,
                a: args.shift.unwrap_or(0.0),
            },
        };
    }
    if let Some(n) = args.dimension {
        cfg.params.dimension = n;
    }
    if let Some(r) = args.r_max {
        cfg.params.r_max = r;
    }
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn model(cfg: &RunConfig) -> Result<Nonlinearity, CliError> {
    Nonlinearity::new(cfg.model.clone()).map_err(|e| CliError::Config(e.to_string()))
}

fn require<T>(v: Option<T>, what: &str, cmd: &str) -> Result<T, CliError> {
    v.ok_or_else(|| {
        CliError::Config(format!(
            "missing {what}\n\nUsage: radial-shooter {cmd} [model flags] {what} ...\nSee `radial-shooter {cmd} --help`."
        ))
    })
}

fn classify_error(e: ClassifyError) -> CliError {
    match e {
        ClassifyError::Shooting(s) => s.into(),
        other => CliError::NonConvergence(other.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))
}

fn solve(
    args: &ModelArgs,
    alpha: Option<f64>,
    out: Option<PathBuf>,
    phase: Option<PathBuf>,
    stride: usize,
) -> Result<(), CliError> {
    let cfg = resolve(args)?;
    let alpha = require(alpha.or(cfg.alpha), "--alpha", "solve")?;
    let nl = model(&cfg)?;
    let traj = integrate_alpha(&nl, &cfg.params, alpha)?;
    let out = out
        .or_else(|| cfg.output.out.clone())
        .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    write(&out, &traj.to_csv(&nl, stride))?;
    if let Some(path) = phase.or_else(|| cfg.output.phase.clone()) {
        write(&path, &phase_curve(&traj, &nl, 4).to_csv())?;
    }
    println!("{}", traj.events_json());
    let constant = traj
        .step_points()
        .iter()
        .all(|&(_, u, du)| (u - alpha).abs() <= 1e-12 * alpha && du == 0.0);
    let (u, du) = traj.final_state();
    eprintln!(
        "alpha = {alpha}: termination {:?} at r = {}, u = {u:e}, u' = {du:e}{}",
        traj.termination,
        traj.r_end,
        if constant { ", constant solution" } else { "" }
    );
    if traj.termination == Termination::StepFailure {
        return Err(CliError::Integration(format!(
            "step size underflow at r = {}",
            traj.r_end
        )));
    }
    Ok(())
}

fn classify(args: &ModelArgs, alpha: Option<f64>) -> Result<(), CliError> {
    let cfg = resolve(args)?;
    let alpha = require(alpha.or(cfg.alpha), "--alpha", "classify")?;
    let c = classify_alpha(&model(&cfg)?, &cfg.params, alpha)?;
    if c.termination == Termination::StepFailure {
        return Err(CliError::Integration(format!(
            "step size underflow at r = {}",
            c.r_end
        )));
    }
    println!("{}", c.verdict);
    Ok(())
}

fn scan(
    args: &ModelArgs,
    from: Option<f64>,
    to: Option<f64>,
    n: Option<usize>,
    format: Option<FormatArg>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut cfg = resolve(args)?;
    let mut block = cfg.scan.unwrap_or_default();
    block.from = from.unwrap_or(block.from);
    block.to = to.unwrap_or(block.to);
    block.n = n.unwrap_or(block.n);
    cfg.scan = Some(block);
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let rows = scan_range(&model(&cfg)?, &cfg.params, block.from, block.to, block.n)?;
    let format = match format {
        Some(FormatArg::Json) => Format::Json,
        Some(FormatArg::Csv) => Format::Csv,
        None => cfg.output.format,
    };
    let text = match format {
        Format::Csv => scan_csv(&rows),
        Format::Json => to_json(&rows)? + "\n",
    };
    match out.or(cfg.output.out) {
        Some(path) => write(&path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn find(
    args: &ModelArgs,
    k: Option<usize>,
    bracket: Option<Vec<f64>>,
    tol: Option<f64>,
) -> Result<(), CliError> {
    let mut cfg = resolve(args)?;
    let base = cfg.find;
    let k = require(k.or(base.map(|f| f.k)), "--k", "find")?;
    let [a, b] = match bracket {
        Some(v) => [v[0], v[1]],
        None => require(base.map(|f| f.bracket), "--bracket", "find")?,
    };
    let tol = tol.or(base.map(|f| f.tol)).unwrap_or(1e-10);
    cfg.find = Some(radial_shooter::config::FindBlock {
        k,
        bracket: [a, b],
        tol,
    });
    cfg.validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let nl = model(&cfg)?;
    // Either endpoint order is accepted; the one with at least k crossings goes first.
    let first = classify_alpha(&nl, &cfg.params, a)?;
    let (inside, outside) = if first.in_n(k) == Some(true) {
        (a, b)
    } else {
        (b, a)
    };
    let rec = find_boundary(&nl, &cfg.params, inside, outside, k, tol).map_err(classify_error)?;
    println!("{}", to_json(&rec)?);
    if !(rec.width() < tol) {
        return Err(CliError::NonConvergence(format!(
            "bracket width {} did not reach {tol}",
            rec.width()
        )));
    }
    Ok(())
}

fn verify(suite: Suite) -> Result<(), CliError> {
    let rep = run_suite(suite).map_err(|e| CliError::Internal(e.to_string()))?;
    println!("{}", to_json(&rep)?);
    if rep.passed {
        Ok(())
    } else {
        let names: Vec<&str> = rep.failures().iter().map(|c| c.name.as_str()).collect();
        Err(CliError::Suite(format!(
            "suite {suite} failed: {}",
            names.join("; ")
        )))
    }
}

fn emit(
    rep: &ExperimentReport,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = to_json(rep)? + "\n";
    match out {
        Some(path) => write(&path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = csv {
        write(&path, &rep.inventory_csv())?;
    }
    for c in &rep.checks {
        eprintln!("[{}] {}", if c.pass { "pass" } else { "FAIL" }, c.name);
    }
    Ok(())
}

fn experiment(
    which: Which,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
    freeze: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = config.as_deref().map(read).transpose()?;
    match which {
        Which::A => {
            let cfg = match text {
                Some(t) => parse_theorem_a(&t).map_err(|e| CliError::Config(e.to_string()))?,
                None => Default::default(),
            };
            let rep = run_theorem_a(&cfg)?;
            emit(&rep, out, csv)?;
            if let Some(path) = freeze {
                match freeze_theorem_a(&cfg, &rep) {
                    Some(golden) => write(&path, &(to_json(&golden)? + "\n"))?,
                    None => eprintln!("no witness cell on this grid; nothing frozen"),
                }
            }
        }
        Which::B => {
            let cfg = match text {
                Some(t) => parse_theorem_b(&t).map_err(|e| CliError::Config(e.to_string()))?,
                None => Default::default(),
            };
            let rep = run_theorem_b(&cfg)?;
            emit(&rep, out, csv)?;
            if let Some(path) = freeze {
                write(&path, &(to_json(&freeze_theorem_b(&cfg, &rep))? + "\n"))?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Solve {
            model,
            alpha,
            out,
            phase,
            stride,
        } => solve(&model, alpha, out, phase, stride),
        Command::Classify { model, alpha } => classify(&model, alpha),
        Command::Scan {
            model,
            from,
            to,
            n,
            format,
            out,
        } => scan(&model, from, to, n, format, out),
        Command::Find {
            model,
            k,
            bracket,
            tol,
        } => find(&model, k, bracket, tol),
        Command::Verify { suite } => verify(suite),
        Command::Experiment {
            which,
            config,
            out,
            csv,
            freeze_golden,
        } => experiment(which, config, out, csv, freeze_golden),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

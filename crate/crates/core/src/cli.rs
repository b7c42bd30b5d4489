//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 experiment failure, 3 I/O.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::convergence::{self, factors_for_steps, ladder, ExperimentConfig, SignPolicy};
use crate::error::SdeError;
use crate::problems::{self, CatalogueEntry, Interpretation, SdeProblem};
use crate::rng::{Channel, RngStream};
use crate::steppers::{integrate, SchemeId};
use crate::wiener::{TimeGrid, WienerPath};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_EXPERIMENT: i32 = 2;
pub const EXIT_IO: i32 = 3;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Parser)]
#[command(name = "heun-sde", version, about = "Strong-convergence experiments for scalar-noise SDEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the problem catalogue and auxiliary problems.
    ListProblems,
    /// Integrate one realization on several step sizes and write trajectories.
    Simulate(SimulateArgs),
    /// Measure RMS final-time error over a step-size ladder and fit the order.
    Converge(ConvergeArgs),
    /// Check closed-form solutions against Itô's formula.
    CheckSolutions(CheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpretationArg {
    Ito,
    Stratonovich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Problem id (see `list-problems`).
    #[arg(long)]
    pub problem: String,
    /// rk (stochastic Heun), em (Euler-Maruyama) or milstein.
    #[arg(long, default_value = "rk", value_parser = clap::value_parser!(SchemeId))]
    pub scheme: SchemeId,
    /// Reinterpret the equation. Drops the closed-form solution if it changes.
    #[arg(long, value_enum)]
    pub interpretation: Option<InterpretationArg>,
    /// Convert a Stratonovich problem to Itô form before integrating.
    #[arg(long)]
    pub to_ito: bool,
    /// Experimental: derive signs from sub-step noise on the next finer level.
    #[arg(long)]
    pub bridge_signs: bool,
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: ProblemArgs,
    /// Step counts to integrate on, e.g. 16,32,64.
    #[arg(long, value_delimiter = ',', conflicts_with = "n")]
    pub levels: Vec<usize>,
    /// Single step count (shorthand for `--levels N`).
    #[arg(long)]
    pub n: Option<usize>,
    /// Fine grid the path is drawn on; defaults to the largest level.
    #[arg(long)]
    pub n_fine: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "simulate-out")]
    pub out: PathBuf,
    /// Also write the fine Wiener path as `k,t,dW,W`.
    #[arg(long)]
    pub dump_paths: bool,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub common: ProblemArgs,
    #[arg(long, default_value_t = 1 << 14)]
    pub n_fine: usize,
    /// Number of levels, starting at 16 steps and doubling.
    #[arg(long, default_value_t = 9)]
    pub levels: usize,
    /// Explicit step counts instead of a generated ladder.
    #[arg(long, value_delimiter = ',')]
    pub steps: Option<Vec<usize>>,
    #[arg(long, default_value_t = 400)]
    pub realizations: usize,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Report file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    /// Check a single catalogue entry.
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// Number of quasi-random (t, W) sample points.
    #[arg(long, default_value_t = 100)]
    pub points: usize,
}

/// Failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn experiment(message: impl Into<String>) -> Self {
        Self { code: EXIT_EXPERIMENT, message: message.into() }
    }

    fn io(path: &Path, e: io::Error) -> Self {
        Self { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

impl From<SdeError> for CliError {
    fn from(e: SdeError) -> Self {
        match e {
            SdeError::NonFinite { .. } => Self::experiment(e.to_string()),
            SdeError::UnknownProblem(_) => Self::usage(format!("{e}\n\n{}", listing())),
            other => Self::usage(other.to_string()),
        }
    }
}

type CliResult<T = i32> = std::result::Result<T, CliError>;

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn execute(command: Command) -> CliResult {
    match command {
        Command::ListProblems => {
            print!("{}", listing());
            Ok(EXIT_OK)
        }
        Command::Simulate(args) => simulate(&args),
        Command::Converge(args) => converge(&args),
        Command::CheckSolutions(args) => check_solutions(&args),
    }
}

fn describe(out: &mut String, e: &CatalogueEntry) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "{}", e.id);
    let _ = writeln!(out, "    sde:      {}", e.sde);
    let _ = writeln!(out, "    solution: {}", e.solution);
    let _ = writeln!(out, "    order:    {:?} (strong, stochastic Heun)", e.expected_order);
}

/// Human-readable catalogue listing.
pub fn listing() -> String {
    let mut out = String::from("catalogue:\n");
    for e in problems::catalogue() {
        describe(&mut out, &e);
    }
    out.push_str("auxiliary:\n");
    for e in problems::auxiliary() {
        describe(&mut out, &e);
    }
    out
}

fn resolve_problem(args: &ProblemArgs) -> CliResult<SdeProblem> {
    let mut problem = problems::lookup(&args.problem)?.problem;
    if let Some(arg) = args.interpretation {
        let wanted = match arg {
            InterpretationArg::Ito => Interpretation::Ito,
            InterpretationArg::Stratonovich => Interpretation::Stratonovich,
        };
        if wanted != problem.interpretation() {
            problem = problem.with_interpretation(wanted).without_exact_solution();
        }
    }
    if args.to_ito {
        problem = problems::stratonovich_to_ito(&problem)?;
    }
    Ok(problem)
}

fn sign_policy(args: &ProblemArgs) -> SignPolicy {
    if args.bridge_signs {
        SignPolicy::Bridge
    } else {
        SignPolicy::Independent
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn simulate(args: &SimulateArgs) -> CliResult {
    let common = &args.common;
    let problem = resolve_problem(common)?;
    let mut levels = match args.n {
        Some(n) => vec![n],
        None if args.levels.is_empty() => vec![16, 32, 64, 128, 256],
        None => args.levels.clone(),
    };
    levels.sort_unstable();
    levels.dedup();
    let n_fine = args.n_fine.unwrap_or(*levels.last().expect("levels not empty"));
    let factors = factors_for_steps(n_fine, &levels)?;

    let grid = TimeGrid::new(common.t0, common.t_end, n_fine)?;
    let fine = WienerPath::sample(grid, &mut RngStream::derive(common.seed, 0, Channel::Wiener, 0));
    let config = ExperimentConfig {
        problem_id: common.problem.clone(),
        scheme: common.scheme,
        n_fine,
        levels: factors.clone(),
        realizations: 1,
        master_seed: common.seed,
        t0: common.t0,
        t_end: common.t_end,
        sign_policy: sign_policy(common),
    };

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    if args.dump_paths {
        let mut buf = Vec::new();
        fine.write_csv(&mut buf).expect("writing to memory");
        write_file(&args.out.join(format!("{}_path.csv", common.problem)), &buf)?;
    }
    for &factor in factors.iter().rev() {
        let path = fine.coarsen(factor)?;
        let signs = convergence::level_signs(&problem, &config, 0, &fine, factor)?;
        let trajectory = integrate(&problem, &path, common.scheme, signs)?;
        let steps = path.grid().steps();
        let file = args.out.join(format!("{}_n{}.csv", common.problem, steps));
        let mut buf = Vec::new();
        trajectory.write_csv(&mut buf, Some(&path)).expect("writing to memory");
        write_file(&file, &buf)?;
        println!(
            "{}\tn={}\tX(t_end)={:?}\tclamps={}",
            file.display(),
            steps,
            trajectory.final_state(),
            trajectory.clamp_count
        );
    }
    if let Some(exact) = problem.exact_solution(common.t_end, fine.total_displacement()) {
        println!("exact X(t_end)={exact:?}\tW(t_end)={}", fine.total_displacement());
    }
    Ok(EXIT_OK)
}

fn converge(args: &ConvergeArgs) -> CliResult {
    let common = &args.common;
    let problem = resolve_problem(common)?;
    let levels = match &args.steps {
        Some(steps) => factors_for_steps(args.n_fine, steps)?,
        None => ladder(args.n_fine, args.levels)?,
    };
    let config = ExperimentConfig {
        problem_id: common.problem.clone(),
        scheme: common.scheme,
        n_fine: args.n_fine,
        levels,
        realizations: args.realizations,
        master_seed: common.seed,
        t0: common.t0,
        t_end: common.t_end,
        sign_policy: sign_policy(common),
    };
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let report = convergence::run_experiment_on(&problem, &config, workers)?;
    let text = match args.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json(),
    };
    match &args.out {
        Some(path) => write_file(path, text.as_bytes())?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    match report.slope {
        Some(s) => eprintln!(
            "{} / {}: slope {s:.4} over {} level(s), {:.2?}",
            config.problem_id,
            config.scheme,
            report.levels.iter().filter(|l| l.in_fit).count(),
            report.wall_time
        ),
        None => eprintln!(
            "{} / {}: slope undefined (fewer than 2 levels above the noise floor), {:.2?}",
            config.problem_id, config.scheme, report.wall_time
        ),
    }
    if report.is_complete() {
        Ok(EXIT_OK)
    } else {
        for l in report.failed_levels() {
            eprintln!(
                "level {} (n={}): {} of {} realizations aborted",
                l.level,
                l.steps,
                l.aborts,
                l.aborts + l.samples
            );
        }
        Err(CliError::experiment("experiment incomplete: too many aborted realizations"))
    }
}

fn check_solutions(args: &CheckArgs) -> CliResult {
    let entries: Vec<CatalogueEntry> = match &args.problem {
        Some(id) => vec![problems::lookup(id)?],
        None => problems::catalogue(),
    };
    let points = problems::residual_sample_points(args.points);
    println!("{:<14} {:>14} {:>14} {:>10}  status", "problem", "drift_resid", "vol_resid", "tolerance");
    let mut all_pass = true;
    for e in &entries {
        let check = problems::check_solution(&e.problem, &points)?;
        let pass = check.passes(args.tolerance);
        all_pass &= pass;
        println!(
            "{:<14} {:>14.3e} {:>14.3e} {:>10.1e}  {}",
            e.id,
            check.max_drift_residual,
            check.max_volatility_residual,
            args.tolerance,
            if pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_EXPERIMENT })
}

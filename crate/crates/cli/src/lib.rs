//! Command implementations behind the `holm` binary.
//!
//! Each `cmd_*` function returns the process exit code: 0 on success, 1 on
//! usage or input errors, 2 when a solve or a check fails.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use holm::benchmark::{
    eta_variants, profile_for, run_benchmark, Measure, MetricsTable, ProfileCurves, SolverSpec,
};
use holm::nalgebra::DVector;
use holm::problems::{builtin_problem, builtin_suite, io::read_vector, load_network, max_jacobian_error};
use holm::{Error, MuStrategy, NlsProblem, ProblemInstance, Solver, SolverConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

/// Default `eta` grid for `tune-eta`.
pub const DEFAULT_ETAS: [f64; 5] = [0.6, 0.8, 1.0, 1.2, 1.4];

/// Points sampled by `check`.
pub const CHECK_POINTS: usize = 10;
/// Largest relative Jacobian error `check` accepts.
pub const CHECK_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Parser)]
#[command(name = "holm", version, about = "Levenberg-Marquardt solvers for nonlinear equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one problem and print the outcome.
    Solve(SolveArgs),
    /// Run a problem x solver grid and write metrics and performance profiles.
    Bench(BenchArgs),
    /// Compare values of the adaptive exponent eta for lmls and lmtr.
    TuneEta(TuneEtaArgs),
    /// Validate a network and compare its Jacobian with finite differences.
    Check(CheckArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Exponent in the adaptive regularisation parameter.
    #[arg(long, default_value_t = 1.2)]
    pub eta: f64,
    /// Absolute tolerance on |h| and |J^T h|.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
}

impl SolverFlags {
    pub fn config(&self) -> Result<SolverConfig, Error> {
        let cfg = SolverConfig {
            eps: self.eps,
            max_iter: self.max_iter,
            mu: MuStrategy::adaptive(self.eta),
            ..SolverConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Built-in problem name.
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub problem: Option<String>,
    /// Network manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// lmls, lmtr, lm-yf, lm-fy or levmar.
    #[arg(long, default_value = "lmls")]
    pub solver: String,
    /// Starting point: `zeros`, `start` (the problem's registered starting
    /// point) or a file with one value per line.
    #[arg(long, default_value = "zeros")]
    pub x0: String,
    /// Write the full report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the per-iteration trace as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Debug, Clone, Args)]
pub struct ProblemSet {
    /// Built-in problems to include (default: all of them).
    #[arg(long = "problem", value_delimiter = ',')]
    pub problems: Vec<String>,
    /// Network manifests to include.
    #[arg(long = "manifest")]
    pub manifests: Vec<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub set: ProblemSet,
    /// Solvers to compare (default: all five).
    #[arg(long = "solver", value_delimiter = ',')]
    pub solvers: Option<Vec<String>>,
    /// Profiles to write (default: ni, nf, mixed, time).
    #[arg(long = "measure", value_delimiter = ',')]
    pub measures: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[command(flatten)]
    pub flags: SolverFlags,
}

#[derive(Debug, Clone, Args)]
pub struct TuneEtaArgs {
    #[command(flatten)]
    pub set: ProblemSet,
    /// Values of eta to compare.
    #[arg(long = "eta", value_delimiter = ',', allow_negative_numbers = true, default_values_t = DEFAULT_ETAS)]
    pub etas: Vec<f64>,
    #[arg(long = "measure", value_delimiter = ',')]
    pub measures: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long, conflicts_with = "manifest", required_unless_present = "manifest")]
    pub problem: Option<String>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Seed for the sampled points.
    #[arg(long, env = "HOLM_SEED", default_value_t = 0)]
    pub seed: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let _ = e.print();
            if e.use_stderr() {
                EXIT_USAGE
            } else {
                EXIT_OK
            }
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::TuneEta(a) => cmd_tune_eta(&a),
        Command::Check(a) => cmd_check(&a),
    }
}

fn usage(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    EXIT_USAGE
}

fn load_instance(problem: Option<&str>, manifest: Option<&Path>) -> Result<ProblemInstance, Error> {
    match (problem, manifest) {
        (Some(name), _) => builtin_problem(name),
        (None, Some(path)) => {
            let net = load_network(path)?;
            for w in net.warnings() {
                log::warn!("{}: {w}", path.display());
            }
            let m = net.dim_x();
            ProblemInstance::new(Arc::new(net), DVector::zeros(m))
        }
        (None, None) => Err(Error::Config("give --problem or --manifest".into())),
    }
}

fn load_set(set: &ProblemSet) -> Result<Vec<ProblemInstance>, Error> {
    if set.problems.is_empty() && set.manifests.is_empty() {
        return Ok(builtin_suite());
    }
    let mut out = Vec::new();
    for name in &set.problems {
        out.push(builtin_problem(name)?);
    }
    for path in &set.manifests {
        out.push(load_instance(None, Some(path))?);
    }
    Ok(out)
}

fn starting_point(spec: &str, inst: &ProblemInstance) -> Result<DVector<f64>, Error> {
    let x0 = match spec {
        "start" => inst.x0.clone(),
        "zeros" => DVector::zeros(inst.problem.dim_x()),
        path => read_vector(Path::new(path))?,
    };
    if x0.len() != inst.problem.dim_x() {
        return Err(Error::Dimension(format!(
            "x0 has {} entries, {} needs {}",
            x0.len(),
            inst.name(),
            inst.problem.dim_x()
        )));
    }
    Ok(x0)
}

fn parse_measures(names: &[String]) -> Result<Vec<Measure>, Error> {
    if names.is_empty() {
        return Ok(Measure::ALL.to_vec());
    }
    names.iter().map(|n| n.parse()).collect()
}

pub fn cmd_solve(args: &SolveArgs) -> i32 {
    let setup = || -> Result<_, Error> {
        let solver: Solver = args.solver.parse()?;
        let cfg = args.flags.config()?;
        let inst = load_instance(args.problem.as_deref(), args.manifest.as_deref())?;
        let x0 = starting_point(&args.x0, &inst)?;
        Ok((solver, cfg, inst, x0))
    };
    let (solver, cfg, inst, x0) = match setup() {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let report = match solver.solve(inst.problem.as_ref(), &x0, &cfg) {
        Ok(r) => r,
        Err(e) => return usage(e),
    };
    println!(
        "{} on {}: {} after {} iterations, {} evaluations; |h| = {:.3e}, |J^T h| = {:.3e}, {:.3e} s",
        report.solver,
        report.problem,
        report.status,
        report.n_i,
        report.n_f,
        report.hnorm_final,
        report.gnorm_final,
        report.elapsed
    );
    if let Some(msg) = &report.message {
        println!("{msg}");
    }
    if let Some(path) = &args.out {
        let written = serde_json::to_string_pretty(&report)
            .map_err(Error::from)
            .and_then(|s| std::fs::write(path, s).map_err(|e| Error::io(path, e)));
        if let Err(e) = written {
            return usage(e);
        }
    }
    if let Some(path) = &args.trace {
        let written = std::fs::File::create(path)
            .map_err(|e| Error::io(path, e))
            .and_then(|f| report.write_trace_csv(f).map_err(Error::from));
        if let Err(e) = written {
            return usage(e);
        }
    }
    if report.status.is_converged() {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

/// Writes `metrics.csv` (or `metrics_<tag>.csv`) and one profile per
/// measure into `dir`.
pub fn write_grid(dir: &Path, tag: Option<&str>, table: &MetricsTable, measures: &[Measure]) -> Result<Vec<ProfileCurves>, Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = |stem: &str| match tag {
        Some(t) => format!("{stem}_{t}"),
        None => stem.to_string(),
    };
    table.write_csv(&dir.join(format!("{}.csv", name("metrics"))))?;
    let mut curves = Vec::new();
    for &m in measures {
        let prof = profile_for(table, m)?;
        prof.write_csv(&dir.join(format!("{}_{m}.csv", name("profile"))))?;
        curves.push(prof);
    }
    Ok(curves)
}

pub fn cmd_bench(args: &BenchArgs) -> i32 {
    let setup = || -> Result<_, Error> {
        let cfg = args.flags.config()?;
        let names: Vec<&str> = match &args.solvers {
            Some(list) => list.iter().map(|s| s.trim()).filter(|s| !s.is_empty()).collect(),
            None => Solver::ALL.iter().map(|s| s.name()).collect(),
        };
        if names.is_empty() {
            return Err(Error::Config("the solver set is empty".into()));
        }
        let solvers = names
            .iter()
            .map(|n| Ok(SolverSpec::new(n.parse()?, cfg.clone())))
            .collect::<Result<Vec<_>, Error>>()?;
        Ok((load_set(&args.set)?, solvers, parse_measures(&args.measures)?))
    };
    let (problems, solvers, measures) = match setup() {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let result = run_benchmark(&problems, &solvers, args.jobs.max(1))
        .and_then(|table| write_grid(&args.out, None, &table, &measures).map(|_| table));
    match result {
        Ok(table) => {
            let solved = table.rows.iter().filter(|r| r.status.is_converged()).count();
            println!("{solved} of {} runs converged; results in {}", table.rows.len(), args.out.display());
            EXIT_OK
        }
        Err(e) => usage(e),
    }
}

/// One grid per adaptive method, with one column per `eta`.
pub fn tune_eta(
    problems: &[ProblemInstance],
    etas: &[f64],
    base: &SolverConfig,
    jobs: usize,
) -> Result<Vec<(Solver, MetricsTable)>, Error> {
    if etas.is_empty() {
        return Err(Error::Config("no eta values given".into()));
    }
    if let Some(bad) = etas.iter().find(|&&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::Config(format!("eta must be positive, got {bad}")));
    }
    [Solver::Lmls, Solver::Lmtr]
        .into_iter()
        .map(|method| {
            let specs = eta_variants(method, etas, base)?;
            Ok((method, run_benchmark(problems, &specs, jobs)?))
        })
        .collect()
}

pub fn cmd_tune_eta(args: &TuneEtaArgs) -> i32 {
    let setup = || -> Result<_, Error> {
        let base = SolverConfig {
            eps: args.eps,
            max_iter: args.max_iter,
            ..SolverConfig::default()
        };
        base.validate()?;
        Ok((base, load_set(&args.set)?, parse_measures(&args.measures)?))
    };
    let (base, problems, measures) = match setup() {
        Ok(v) => v,
        Err(e) => return usage(e),
    };
    let grids = match tune_eta(&problems, &args.etas, &base, args.jobs.max(1)) {
        Ok(g) => g,
        Err(e) => return usage(e),
    };
    for (method, table) in &grids {
        if let Err(e) = write_grid(&args.out, Some(method.name()), table, &measures) {
            return usage(e);
        }
        let solved = table.rows.iter().filter(|r| r.status.is_converged()).count();
        println!("{method}: {solved} of {} runs converged", table.rows.len());
    }
    println!("results in {}", args.out.display());
    EXIT_OK
}

pub fn cmd_check(args: &CheckArgs) -> i32 {
    let inst = match load_instance(args.problem.as_deref(), args.manifest.as_deref()) {
        Ok(i) => i,
        Err(Error::Validation(list)) => {
            eprintln!("validation failed:");
            for v in list {
                eprintln!("  {v}");
            }
            return EXIT_FAILURE;
        }
        Err(e) => return usage(e),
    };
    println!(
        "{}: {} unknowns, {} equations",
        inst.name(),
        inst.problem.dim_x(),
        inst.problem.dim_h()
    );
    match max_jacobian_error(inst.problem.as_ref(), CHECK_POINTS, args.seed) {
        Ok(err) => {
            let pass = err <= CHECK_TOLERANCE;
            println!(
                "max relative Jacobian error over {CHECK_POINTS} points: {err:.3e} ({})",
                if pass { "pass" } else { "FAIL" }
            );
            if pass {
                EXIT_OK
            } else {
                EXIT_FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_FAILURE
        }
    }
}

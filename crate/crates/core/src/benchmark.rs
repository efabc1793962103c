//! Solver x problem grids and performance profiles.
//!
//! For a measure `t[p][s]` (iterations, evaluations, `N_f + 3 N_i`, or wall
//! time) the ratio `r[p][s] = t[p][s] / min_s t[p][s]` compares each solver
//! with the best one on problem `p`; a failed run gets `r_failed`, twice the
//! largest finite ratio. The profile `rho_s(tau)` is the fraction of
//! problems with `r[p][s] <= tau`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::mu::{MuStrategy, XiSchedule};
use crate::problem::ProblemInstance;
use crate::report::Status;
use crate::solver::Solver;

/// Number of points in the default `tau` grid.
pub const TAU_POINTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    Iterations,
    Evaluations,
    /// `N_f + 3 N_i`.
    Mixed,
    Time,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::Iterations, Measure::Evaluations, Measure::Mixed, Measure::Time];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Iterations => "ni",
            Measure::Evaluations => "nf",
            Measure::Mixed => "mixed",
            Measure::Time => "time",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ni" | "n_i" | "iterations" => Ok(Measure::Iterations),
            "nf" | "n_f" | "evaluations" => Ok(Measure::Evaluations),
            "mixed" => Ok(Measure::Mixed),
            "t" | "time" => Ok(Measure::Time),
            _ => Err(Error::Config(format!("unknown measure `{s}` (ni, nf, mixed, time)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub problem: String,
    pub solver: String,
    pub status: Status,
    #[serde(rename = "N_i")]
    pub n_i: usize,
    #[serde(rename = "N_f")]
    pub n_f: usize,
    #[serde(rename = "T")]
    pub t: f64,
    pub hnorm: f64,
    pub gnorm: f64,
    pub mixed: usize,
}

impl MetricsRow {
    pub fn value(&self, measure: Measure) -> f64 {
        match measure {
            Measure::Iterations => self.n_i as f64,
            Measure::Evaluations => self.n_f as f64,
            Measure::Mixed => self.mixed as f64,
            Measure::Time => self.t,
        }
    }
}

pub fn mixed_measure(n_f: usize, n_i: usize) -> usize {
    n_f + 3 * n_i
}

/// One row per (problem, solver) pair, problems outermost.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsTable {
    pub rows: Vec<MetricsRow>,
}

fn unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in it {
        if !out.iter().any(|o| o == s) {
            out.push(s.to_string());
        }
    }
    out
}

impl MetricsTable {
    pub fn problems(&self) -> Vec<String> {
        unique(self.rows.iter().map(|r| r.problem.as_str()))
    }

    pub fn solvers(&self) -> Vec<String> {
        unique(self.rows.iter().map(|r| r.solver.as_str()))
    }

    pub fn get(&self, problem: &str, solver: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.problem == problem && r.solver == solver)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    /// Header `problem,solver,status,N_i,N_f,T,hnorm,gnorm,mixed`, written
    /// even for an empty table.
    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        out.write_record(["problem", "solver", "status", "N_i", "N_f", "T", "hnorm", "gnorm", "mixed"])?;
        for r in &self.rows {
            out.serialize(r)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv_from(file)
    }

    pub fn read_csv_from<R: std::io::Read>(r: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<MetricsRow>, _>>()?;
        Ok(Self { rows })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(&self.rows)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }
}

/// A named solver with its configuration; one column of the grid.
#[derive(Debug, Clone)]
pub struct SolverSpec {
    pub name: String,
    pub solver: Solver,
    pub config: SolverConfig,
}

impl SolverSpec {
    pub fn new(solver: Solver, config: SolverConfig) -> Self {
        Self {
            name: solver.name().to_string(),
            solver,
            config,
        }
    }
}

/// The standard comparison: both adaptive methods and the three baselines.
pub fn standard_solvers(config: &SolverConfig) -> Vec<SolverSpec> {
    Solver::ALL.into_iter().map(|s| SolverSpec::new(s, config.clone())).collect()
}

/// One variant of `method` per `eta`, each named `<method>-eta<eta>`.
pub fn eta_variants(method: Solver, etas: &[f64], base: &SolverConfig) -> Result<Vec<SolverSpec>> {
    if method.fixed_mu().is_some() {
        return Err(Error::Config(format!("{method} does not use the adaptive parameter")));
    }
    etas.iter()
        .map(|&eta| {
            let schedule = match base.mu {
                MuStrategy::Adaptive { schedule, .. } => schedule,
                _ => XiSchedule::Decaying,
            };
            let config = SolverConfig {
                mu: MuStrategy::Adaptive { eta, schedule },
                ..base.clone()
            };
            config.validate()?;
            Ok(SolverSpec {
                name: format!("{}-eta{eta}", method.name()),
                solver: method,
                config,
            })
        })
        .collect()
}

/// Solves every (problem, solver) pair from the problem's own starting point.
///
/// Cells run on up to `jobs` threads; rows come back in grid order, so a
/// rerun yields identical counters. Failed solves are rows with a
/// non-converged status; only invalid configurations abort the grid.
pub fn run_benchmark(problems: &[ProblemInstance], solvers: &[SolverSpec], jobs: usize) -> Result<MetricsTable> {
    if problems.is_empty() || solvers.is_empty() {
        return Err(Error::Config("benchmark needs at least one problem and one solver".into()));
    }
    let cells: Vec<(&ProblemInstance, &SolverSpec)> = problems
        .iter()
        .flat_map(|p| solvers.iter().map(move |s| (p, s)))
        .collect();
    let run_cell = |(p, s): &(&ProblemInstance, &SolverSpec)| -> Result<MetricsRow> {
        let start = Instant::now();
        let report = s.solver.solve_as(&s.name, p.problem.as_ref(), &p.x0, &s.config)?;
        let t = start.elapsed().as_secs_f64();
        log::info!("{} / {}: {} in {} iterations", p.name(), s.name, report.status, report.n_i);
        Ok(MetricsRow {
            problem: p.name().to_string(),
            solver: s.name.clone(),
            status: report.status,
            n_i: report.n_i,
            n_f: report.n_f,
            t,
            hnorm: report.hnorm_final,
            gnorm: report.gnorm_final,
            mixed: mixed_measure(report.n_f, report.n_i),
        })
    };
    let rows: Vec<MetricsRow> = if jobs <= 1 {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?
    };
    Ok(MetricsTable { rows })
}

/// Performance ratios, problems by solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioMatrix {
    pub measure: Measure,
    pub problems: Vec<String>,
    pub solvers: Vec<String>,
    /// `ratios[p][s]`.
    pub ratios: Vec<Vec<f64>>,
    pub r_failed: f64,
    pub warnings: Vec<String>,
}

/// Ratios of each solver's measure to the best measure on the same problem.
///
/// When the best value on a problem is zero (e.g. the start is already a
/// zero, so `N_i = 0`), that problem's values are shifted by one first.
pub fn performance_ratios(table: &MetricsTable, measure: Measure) -> Result<RatioMatrix> {
    let problems = table.problems();
    let solvers = table.solvers();
    let mut values: Vec<Vec<Option<f64>>> = Vec::with_capacity(problems.len());
    for p in &problems {
        let mut row = Vec::with_capacity(solvers.len());
        for s in &solvers {
            let cell = table
                .get(p, s)
                .ok_or_else(|| Error::Config(format!("metrics table has no row for ({p}, {s})")))?;
            row.push(cell.status.is_converged().then(|| cell.value(measure)));
        }
        values.push(row);
    }

    let mut warnings = Vec::new();
    let mut ratios: Vec<Vec<Option<f64>>> = Vec::with_capacity(problems.len());
    for (p, row) in problems.iter().zip(&values) {
        let best = row.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        if best.is_infinite() {
            let w = format!("every solver failed on {p}");
            log::warn!("{w}");
            warnings.push(w);
            ratios.push(vec![None; row.len()]);
            continue;
        }
        let shift = if best <= 0.0 { 1.0 } else { 0.0 };
        ratios.push(row.iter().map(|v| v.map(|t| (t + shift) / (best + shift))).collect());
    }
    let max_finite = ratios.iter().flatten().flatten().copied().fold(1.0, f64::max);
    let r_failed = 2.0 * max_finite;
    Ok(RatioMatrix {
        measure,
        problems,
        solvers,
        ratios: ratios
            .into_iter()
            .map(|row| row.into_iter().map(|r| r.unwrap_or(r_failed)).collect())
            .collect(),
        r_failed,
        warnings,
    })
}

/// `points` log-spaced values `r_failed^(i / points)`, `i = 0..points`:
/// starts at 1 and stops short of `r_failed`, so the last value shows the
/// fraction of problems solved.
pub fn default_tau_grid(r_failed: f64, points: usize) -> Vec<f64> {
    let points = points.max(1);
    let top = r_failed.max(1.0).ln();
    (0..points).map(|i| (top * i as f64 / points as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCurves {
    pub measure: Measure,
    pub tau: Vec<f64>,
    pub solvers: Vec<String>,
    /// `rho[s][i]` is the profile of solver `s` at `tau[i]`.
    pub rho: Vec<Vec<f64>>,
}

pub fn performance_profile(ratios: &RatioMatrix, tau_grid: &[f64]) -> ProfileCurves {
    debug_assert!(tau_grid.windows(2).all(|w| w[0] <= w[1]), "tau grid must be sorted");
    let n_p = ratios.problems.len();
    let mut rho = Vec::with_capacity(ratios.solvers.len());
    for s in 0..ratios.solvers.len() {
        let mut col: Vec<f64> = ratios.ratios.iter().map(|row| row[s]).collect();
        col.sort_by(f64::total_cmp);
        let curve = tau_grid
            .iter()
            .map(|&tau| {
                if n_p == 0 {
                    0.0
                } else {
                    col.partition_point(|&r| r <= tau) as f64 / n_p as f64
                }
            })
            .collect();
        rho.push(curve);
    }
    ProfileCurves {
        measure: ratios.measure,
        tau: tau_grid.to_vec(),
        solvers: ratios.solvers.clone(),
        rho,
    }
}

/// Ratios and profile on the default grid for one measure.
pub fn profile_for(table: &MetricsTable, measure: Measure) -> Result<ProfileCurves> {
    let ratios = performance_ratios(table, measure)?;
    let grid = default_tau_grid(ratios.r_failed, TAU_POINTS);
    Ok(performance_profile(&ratios, &grid))
}

impl ProfileCurves {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(file)
    }

    /// Columns `tau`, then one column per solver.
    pub fn write_csv_to<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["tau".to_string()];
        header.extend(self.solvers.iter().cloned());
        out.write_record(&header)?;
        for (i, tau) in self.tau.iter().enumerate() {
            let mut rec = vec![tau.to_string()];
            rec.extend(self.rho.iter().map(|c| c[i].to_string()));
            out.write_record(&rec)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path, measure: Measure) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let solvers: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
        let mut tau = Vec::new();
        let mut rho = vec![Vec::new(); solvers.len()];
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("{}: `{s}` is not a number", path.display())))
            };
            tau.push(parse(&rec[0])?);
            for (c, v) in rho.iter_mut().zip(rec.iter().skip(1)) {
                c.push(parse(v)?);
            }
        }
        Ok(Self {
            measure,
            tau,
            solvers,
            rho,
        })
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self)?;
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    /// Every curve is nondecreasing and within `[0, 1]`.
    pub fn is_valid(&self) -> bool {
        self.rho.iter().all(|c| {
            c.len() == self.tau.len()
                && c.iter().all(|v| (0.0..=1.0).contains(v))
                && c.windows(2).all(|w| w[0] <= w[1])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(problem: &str, solver: &str, status: Status, n_i: usize, n_f: usize) -> MetricsRow {
        MetricsRow {
            problem: problem.into(),
            solver: solver.into(),
            status,
            n_i,
            n_f,
            t: 0.1,
            hnorm: 0.0,
            gnorm: 0.0,
            mixed: mixed_measure(n_f, n_i),
        }
    }

    fn table(t: &[&[usize]]) -> MetricsTable {
        let mut rows = Vec::new();
        for (p, r) in t.iter().enumerate() {
            for (s, &v) in r.iter().enumerate() {
                rows.push(row(&format!("p{p}"), &format!("s{s}"), Status::ConvergedResidual, v, v));
            }
        }
        MetricsTable { rows }
    }

    #[test]
    fn two_by_two_ratios() {
        let r = performance_ratios(&table(&[&[2, 1], &[4, 4]]), Measure::Iterations).unwrap();
        assert_eq!(r.ratios, vec![vec![2.0, 1.0], vec![1.0, 1.0]]);
        let prof = performance_profile(&r, &[1.0, 2.0]);
        assert_eq!(prof.rho[0], vec![0.5, 1.0]);
        assert_eq!(prof.rho[1], vec![1.0, 1.0]);
    }

    #[test]
    fn single_solver_all_ones() {
        let r = performance_ratios(&table(&[&[5], &[9], &[1]]), Measure::Evaluations).unwrap();
        assert!(r.ratios.iter().all(|row| row == &vec![1.0]));
        let prof = performance_profile(&r, &default_tau_grid(r.r_failed, 50));
        assert!(prof.rho[0].iter().all(|&v| v == 1.0));
    }

    #[test]
    fn failed_run_gets_r_failed() {
        let mut t = table(&[&[2, 1], &[3, 6]]);
        t.rows[1].status = Status::MaxIterations;
        let r = performance_ratios(&t, Measure::Iterations).unwrap();
        // finite ratios: 1 (p0 s0 is the only success), 1, 2
        assert_eq!(r.r_failed, 4.0);
        assert_eq!(r.ratios[0][1], 4.0);
        assert!(r.ratios.iter().flatten().filter(|&&v| v != r.r_failed).all(|&v| v < r.r_failed));
        let grid = default_tau_grid(r.r_failed, TAU_POINTS);
        let prof = performance_profile(&r, &grid);
        assert_eq!(*prof.rho[1].last().unwrap(), 0.5);
        assert_eq!(*prof.rho[0].last().unwrap(), 1.0);
    }

    #[test]
    fn all_failed_problem_warns() {
        let mut t = table(&[&[2, 1], &[3, 6]]);
        t.rows[2].status = Status::LineSearchFailure;
        t.rows[3].status = Status::NumericalBreakdown;
        let r = performance_ratios(&t, Measure::Iterations).unwrap();
        assert_eq!(r.warnings.len(), 1);
        assert_eq!(r.ratios[1], vec![r.r_failed, r.r_failed]);
    }

    #[test]
    fn zero_best_value_is_shifted() {
        let r = performance_ratios(&table(&[&[0, 3]]), Measure::Iterations).unwrap();
        assert_eq!(r.ratios[0], vec![1.0, 4.0]);
    }

    #[test]
    fn mixed_measure_column() {
        let r = row("p", "s", Status::ConvergedResidual, 7, 10);
        assert_eq!(r.value(Measure::Mixed), 31.0);
    }

    #[test]
    fn tau_grid_shape() {
        let g = default_tau_grid(8.0, TAU_POINTS);
        assert_eq!(g.len(), TAU_POINTS);
        assert_eq!(g[0], 1.0);
        assert!(*g.last().unwrap() < 8.0 && *g.last().unwrap() >= 4.0);
    }

    #[test]
    fn empty_table_writes_header_only() {
        let mut buf = Vec::new();
        MetricsTable::default().write_csv_to(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "problem,solver,status,N_i,N_f,T,hnorm,gnorm,mixed\n");
    }

    #[test]
    fn csv_round_trip() {
        let t = table(&[&[2, 1], &[4, 4]]);
        let mut buf = Vec::new();
        t.write_csv_to(&mut buf).unwrap();
        assert_eq!(MetricsTable::read_csv_from(buf.as_slice()).unwrap(), t);
    }

    #[test]
    fn measure_names() {
        for m in Measure::ALL {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
    }
}

//! Bookkeeping shared by the solver drivers.

use std::time::Instant;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::merit::{Counters, MeritEval};
use crate::problem::{check_point, NlsProblem};
use crate::report::{IterRecord, SolveReport, Status};
use crate::SolverConfig;

pub(crate) struct Progress {
    pub counters: Counters,
    pub trace: Vec<IterRecord>,
    pub n_i: usize,
    x: Vec<f64>,
    hnorm: f64,
    gnorm: f64,
}

impl Progress {
    fn new(x0: &DVector<f64>) -> Self {
        Self {
            counters: Counters::default(),
            trace: Vec::new(),
            n_i: 0,
            x: x0.as_slice().to_vec(),
            hnorm: f64::NAN,
            gnorm: f64::NAN,
        }
    }

    /// Marks `e` as the current iterate.
    pub fn accept(&mut self, e: &MeritEval) {
        self.x.clear();
        self.x.extend_from_slice(e.x.as_slice());
        self.hnorm = e.hnorm;
        self.gnorm = e.gnorm;
    }

    pub fn record(&self, e: &MeritEval, k: usize, d_ref: f64, theta: f64, cfg: &SolverConfig) -> IterRecord {
        let mut rec = IterRecord::at(k, e.psi, e.hnorm, e.gnorm, d_ref, theta);
        if cfg.record_iterates {
            rec.x = Some(e.x.as_slice().to_vec());
        }
        rec
    }
}

pub(crate) type Outcome = Result<(Status, Option<String>)>;

/// Validates inputs, runs `body`, and turns numerical breakdowns into a
/// report status. Configuration and dimension errors are returned as `Err`.
pub(crate) fn run_solver<F>(
    solver: &str,
    problem: &dyn NlsProblem,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
    body: F,
) -> Result<SolveReport>
where
    F: FnOnce(&mut Progress) -> Outcome,
{
    cfg.validate()?;
    check_point(problem, x0)?;
    let start = Instant::now();
    let mut progress = Progress::new(x0);
    let (status, message) = match body(&mut progress) {
        Ok(v) => v,
        Err(e @ Error::NumericalBreakdown { .. }) => (Status::NumericalBreakdown, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(msg) = &message {
        log::debug!("{solver} on {}: {status}: {msg}", problem.name());
    }
    Ok(SolveReport {
        solver: solver.to_string(),
        problem: problem.name().to_string(),
        status,
        x_final: progress.x,
        hnorm_final: progress.hnorm,
        gnorm_final: progress.gnorm,
        n_i: progress.n_i,
        n_f: progress.counters.n_f,
        n_j: progress.counters.n_j,
        elapsed,
        message,
        trace: progress.trace,
    })
}

//! Solver parameters. Defaults are the values used for the biochemical
//! network experiments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mu::MuStrategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSearchParams {
    /// Initial trial step.
    pub alpha_bar: f64,
    /// Backtracking factor in `]0, 1[`.
    pub rho: f64,
    /// Armijo slope fraction in `]0, 1[`.
    pub sigma: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        Self {
            alpha_bar: 1.0,
            rho: 0.5,
            sigma: 1e-2,
            max_backtracks: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrustRegionParams {
    /// Growth factor for `lambda` after a poor ratio, `> 1`.
    pub rho1: f64,
    /// Shrink factor for `lambda` after a very good ratio, in `]0, 1[`.
    pub rho2: f64,
    /// Acceptance threshold.
    pub upsilon1: f64,
    /// "Very successful" threshold, `upsilon1 < upsilon2 < 1`.
    pub upsilon2: f64,
    pub lambda0: f64,
    /// Lower bound on the effective regularisation.
    pub mu_min: f64,
    pub max_inner: usize,
}

impl Default for TrustRegionParams {
    fn default() -> Self {
        Self {
            rho1: 2.0,
            rho2: 0.5,
            upsilon1: 1e-4,
            upsilon2: 0.9,
            lambda0: 1e-2,
            mu_min: 1e-8,
            max_inner: 60,
        }
    }
}

/// Weight `theta_k` of the nonmonotone reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ThetaSchedule {
    Constant(f64),
    /// `theta_k = values[min(k, len - 1)]`.
    Sequence(Vec<f64>),
}

impl ThetaSchedule {
    pub fn at(&self, k: usize) -> f64 {
        match self {
            ThetaSchedule::Constant(t) => *t,
            ThetaSchedule::Sequence(v) => v[k.min(v.len() - 1)],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = |t: f64| (0.0..1.0).contains(&t);
        match self {
            ThetaSchedule::Constant(t) if !ok(*t) => {
                Err(Error::Config(format!("theta must lie in [0, 1), got {t}")))
            }
            ThetaSchedule::Sequence(v) if v.is_empty() => {
                Err(Error::Config("theta sequence is empty".into()))
            }
            ThetaSchedule::Sequence(v) => match v.iter().find(|t| !ok(**t)) {
                Some(t) => Err(Error::Config(format!("theta must lie in [0, 1), got {t}"))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Absolute stopping tolerance.
    pub eps: f64,
    /// Stopping tolerance relative to the values at `x0`.
    pub rel: f64,
    pub max_iter: usize,
    pub mu: MuStrategy,
    pub line_search: LineSearchParams,
    pub trust_region: TrustRegionParams,
    pub theta: ThetaSchedule,
    /// Also stop when the gradient norm is small. Turning this off leaves
    /// only the residual test.
    pub stop_on_gradient: bool,
    /// Store every iterate in the trace.
    pub record_iterates: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            rel: 1e-12,
            max_iter: 100_000,
            mu: MuStrategy::default(),
            line_search: LineSearchParams::default(),
            trust_region: TrustRegionParams::default(),
            theta: ThetaSchedule::Constant(0.95),
            stop_on_gradient: true,
            record_iterates: false,
        }
    }
}

fn in_open_unit(v: f64) -> bool {
    v > 0.0 && v < 1.0
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.rel >= 0.0 && self.rel.is_finite()) {
            return bad(format!("relative stopping factor must be nonnegative, got {}", self.rel));
        }
        self.mu.validate()?;
        self.theta.validate()?;

        let ls = &self.line_search;
        if !(ls.alpha_bar > 0.0 && ls.alpha_bar.is_finite()) {
            return bad(format!("alpha_bar must be positive, got {}", ls.alpha_bar));
        }
        if !in_open_unit(ls.rho) {
            return bad(format!("rho must lie in ]0, 1[, got {}", ls.rho));
        }
        if !in_open_unit(ls.sigma) {
            return bad(format!("sigma must lie in ]0, 1[, got {}", ls.sigma));
        }

        let tr = &self.trust_region;
        if !(tr.rho1 > 1.0 && tr.rho1.is_finite()) {
            return bad(format!("rho1 must exceed 1, got {}", tr.rho1));
        }
        if !in_open_unit(tr.rho2) {
            return bad(format!("rho2 must lie in ]0, 1[, got {}", tr.rho2));
        }
        if !(in_open_unit(tr.upsilon1) && in_open_unit(tr.upsilon2) && tr.upsilon1 < tr.upsilon2) {
            return bad(format!(
                "need 0 < upsilon1 < upsilon2 < 1, got {} and {}",
                tr.upsilon1, tr.upsilon2
            ));
        }
        if !(tr.lambda0 > 0.0 && tr.lambda0.is_finite()) {
            return bad(format!("lambda0 must be positive, got {}", tr.lambda0));
        }
        if !(tr.mu_min > 0.0 && tr.mu_min.is_finite()) {
            return bad(format!("mu_min must be positive, got {}", tr.mu_min));
        }
        Ok(())
    }
}

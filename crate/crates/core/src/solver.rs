use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::lmls::lmls_solve_named;
use crate::lmtr::lmtr_solve_named;
use crate::mu::MuStrategy;
use crate::problem::NlsProblem;
use crate::report::SolveReport;

/// The two adaptive methods and the three baselines.
///
/// The baselines share a driver with one of the adaptive methods and differ
/// only in the regularisation rule: `LmYf` uses `|h|^2` and `LmFy` uses
/// `|h|` with the line search; `LevMar` uses `|J^T h|` with the trust region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Solver {
    Lmls,
    Lmtr,
    LmYf,
    LmFy,
    LevMar,
}

impl Solver {
    pub const ALL: [Solver; 5] = [Solver::Lmls, Solver::Lmtr, Solver::LmYf, Solver::LmFy, Solver::LevMar];

    pub fn name(self) -> &'static str {
        match self {
            Solver::Lmls => "lmls",
            Solver::Lmtr => "lmtr",
            Solver::LmYf => "lm-yf",
            Solver::LmFy => "lm-fy",
            Solver::LevMar => "levmar",
        }
    }

    /// Regularisation rule this solver runs with; `None` means the one in the
    /// configuration.
    pub fn fixed_mu(self) -> Option<MuStrategy> {
        match self {
            Solver::Lmls | Solver::Lmtr => None,
            Solver::LmYf => Some(MuStrategy::Yf),
            Solver::LmFy => Some(MuStrategy::Fy),
            Solver::LevMar => Some(MuStrategy::LevMar),
        }
    }

    pub fn uses_trust_region(self) -> bool {
        matches!(self, Solver::Lmtr | Solver::LevMar)
    }

    pub fn solve(self, problem: &dyn NlsProblem, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<SolveReport> {
        self.solve_as(self.name(), problem, x0, cfg)
    }

    /// Like [`Solver::solve`], labelling the report with `label`.
    pub fn solve_as(
        self,
        label: &str,
        problem: &dyn NlsProblem,
        x0: &DVector<f64>,
        cfg: &SolverConfig,
    ) -> Result<SolveReport> {
        let owned;
        let cfg = match self.fixed_mu() {
            Some(mu) => {
                owned = SolverConfig { mu, ..cfg.clone() };
                &owned
            }
            None => cfg,
        };
        if self.uses_trust_region() {
            lmtr_solve_named(label, problem, x0, cfg)
        } else {
            lmls_solve_named(label, problem, x0, cfg)
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Solver::ALL
            .into_iter()
            .find(|v| v.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownSolver(s.to_string()))
    }
}

//! Globally convergent Levenberg-Marquardt methods for `h(x) = 0` when the
//! zeros of `h` need not be isolated and the Jacobian may be singular there.
//!
//! Two solvers share the adaptive regularisation
//! `mu_k = xi_k |h(x_k)|^eta + omega_k |J(x_k)^T h(x_k)|^eta`:
//!
//! * [`lmls_solve`] takes the Levenberg-Marquardt direction and a
//!   nonmonotone Armijo backtracking line search;
//! * [`lmtr_solve`] accepts or rejects full steps by a nonmonotone
//!   trust-region ratio, scaling `mu_k` by an adaptive `lambda_k`.
//!
//! Three baselines (`|h|^2`, `|h|` and `|J^T h|` as the parameter) run on the
//! same drivers; see [`Solver`]. The [`problems`] module provides the
//! steady-state mapping of mass-action reaction networks and a set of small
//! analytic problems, and [`benchmark`] turns solver grids into performance
//! profiles.
//!
//! ```
//! use holm::{problems::builtin_problem, Solver, SolverConfig, Status};
//!
//! let circle = builtin_problem("circle").unwrap();
//! let report = Solver::Lmtr
//!     .solve(circle.problem.as_ref(), &circle.x0, &SolverConfig::default())
//!     .unwrap();
//! assert_eq!(report.status, Status::ConvergedResidual);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod benchmark;
pub mod config;
mod driver;
pub mod error;
pub mod linalg;
pub mod lmls;
pub mod lmtr;
pub mod merit;
pub mod mu;
pub mod problem;
pub mod problems;
pub mod report;
pub mod solver;
pub mod stop;

pub use config::{LineSearchParams, SolverConfig, ThetaSchedule, TrustRegionParams};
pub use error::{Error, Result, Violation};
pub use linalg::solve_lm_system;
pub use lmls::{armijo_search, lmls_solve, nonmonotone_update};
pub use lmtr::{lambda_update, lmtr_solve, predicted_reduction, ratio_hat};
pub use merit::{eval_merit, Counters, MeritEval};
pub use mu::{compute_mu, xi_schedule, MuStrategy, XiSchedule};
pub use problem::{FnProblem, NlsProblem, ProblemInstance};
pub use report::{IterRecord, SolveReport, Status};
pub use solver::Solver;
pub use stop::check_stop;

pub use nalgebra;

//! Levenberg-Marquardt directions globalised by a nonmonotone Armijo
//! backtracking line search.
//!
//! The acceptance test compares against a reference value `D_k` instead of
//! `psi(x_k)`:
//!
//! ```text
//! psi(x_k + alpha d_k) <= D_k + sigma * alpha * grad_psi(x_k)^T d_k
//! D_0 = psi(x_0),   D_{k+1} = (1 - theta_k) psi(x_{k+1}) + theta_k D_k
//! ```
//!
//! `theta_k = 0` recovers the monotone Armijo rule.

use nalgebra::DVector;
use thiserror::Error;

use crate::config::{LineSearchParams, SolverConfig};
use crate::driver::{run_solver, Outcome, Progress};
use crate::error::{Error, Result};
use crate::linalg::solve_lm_system;
use crate::merit::{complete_eval, eval_merit, eval_residual, Counters};
use crate::mu::compute_mu;
use crate::problem::NlsProblem;
use crate::report::{SolveReport, Status};
use crate::stop::check_stop_norms;

/// Next nonmonotone reference value from the previous one and the merit
/// value at the newly accepted point.
///
/// Requires `psi_new <= d_prev`, which every accepted step guarantees; the
/// result then satisfies `psi_new <= D <= d_prev`.
pub fn nonmonotone_update(d_prev: f64, theta_prev: f64, psi_new: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&theta_prev), "theta out of range: {theta_prev}");
    debug_assert!(psi_new <= d_prev, "accepted merit {psi_new} above reference {d_prev}");
    // psi + theta (D - psi) keeps the lower bound exact in floating point.
    (psi_new + theta_prev * (d_prev - psi_new)).min(d_prev)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trial {
    pub alpha: f64,
    pub psi: f64,
}

#[derive(Debug, Clone)]
pub struct ArmijoOutcome {
    pub alpha: f64,
    pub backtracks: usize,
    /// Every evaluated trial, in order; the last one is the accepted step.
    pub trials: Vec<Trial>,
    /// Residual at the accepted point.
    pub h: DVector<f64>,
    pub psi: f64,
}

#[derive(Debug, Error)]
pub enum LineSearchError {
    #[error("not a descent direction (grad^T d = {0})")]
    NotDescent(f64),
    #[error("reference value {d_ref} is below psi(x) = {psi}")]
    ReferenceBelowMerit { d_ref: f64, psi: f64 },
    #[error("no acceptable step after {backtracks} backtracks (best trial alpha = {:e}, psi = {:e})", .best.alpha, .best.psi)]
    Exhausted { backtracks: usize, best: Trial },
    #[error(transparent)]
    Eval(#[from] Error),
}

/// Backtracks `alpha = rho^l * alpha_bar`, `l = 0, 1, ...`, until the
/// nonmonotone Armijo condition holds. Each trial is one residual evaluation.
#[allow(clippy::too_many_arguments)]
pub fn armijo_search(
    problem: &dyn NlsProblem,
    x: &DVector<f64>,
    psi_x: f64,
    d: &DVector<f64>,
    grad_dot_d: f64,
    d_ref: f64,
    params: &LineSearchParams,
    counters: &mut Counters,
) -> Result<ArmijoOutcome, LineSearchError> {
    if !(grad_dot_d < 0.0) {
        return Err(LineSearchError::NotDescent(grad_dot_d));
    }
    if d_ref < psi_x {
        return Err(LineSearchError::ReferenceBelowMerit { d_ref, psi: psi_x });
    }
    let mut trials = Vec::new();
    let mut alpha = params.alpha_bar;
    for l in 0..=params.max_backtracks {
        let (h, psi) = eval_residual(problem, &(x + d * alpha), counters)?;
        trials.push(Trial { alpha, psi });
        if psi <= d_ref + params.sigma * alpha * grad_dot_d {
            return Ok(ArmijoOutcome {
                alpha,
                backtracks: l,
                trials,
                h,
                psi,
            });
        }
        alpha *= params.rho;
    }
    let best = trials
        .iter()
        .copied()
        .min_by(|a, b| a.psi.total_cmp(&b.psi))
        .expect("at least one trial");
    Err(LineSearchError::Exhausted {
        backtracks: params.max_backtracks,
        best,
    })
}

/// Solves `h(x) = 0` with the line-search Levenberg-Marquardt method using
/// the regularisation rule in `cfg.mu`.
pub fn lmls_solve(problem: &dyn NlsProblem, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<SolveReport> {
    lmls_solve_named("lmls", problem, x0, cfg)
}

pub(crate) fn lmls_solve_named(
    name: &str,
    problem: &dyn NlsProblem,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    run_solver(name, problem, x0, cfg, |p| lmls_loop(problem, x0, cfg, p))
}

fn lmls_loop(problem: &dyn NlsProblem, x0: &DVector<f64>, cfg: &SolverConfig, p: &mut Progress) -> Outcome {
    let mut cur = eval_merit(problem, x0, &mut p.counters)?;
    p.accept(&cur);
    let (hnorm0, gnorm0) = (cur.hnorm, cur.gnorm);
    let mut d_ref = cur.psi;
    let mut k = 0;
    loop {
        let theta = cfg.theta.at(k);
        let mut rec = p.record(&cur, k, d_ref, theta, cfg);
        let stop = check_stop_norms(cur.hnorm, cur.gnorm, hnorm0, gnorm0, cfg.eps, cfg.rel, cfg.stop_on_gradient);
        if let Some(status) = stop {
            p.trace.push(rec);
            return Ok((status, None));
        }
        if k >= cfg.max_iter {
            p.trace.push(rec);
            return Ok((Status::MaxIterations, None));
        }

        let mu = compute_mu(&cfg.mu, k, cur.hnorm, cur.gnorm)?;
        if !(mu > 0.0) {
            return Err(Error::breakdown(format!("LM parameter underflowed to {mu:e}"), cur.x.as_slice()));
        }
        let d = solve_lm_system(&cur.jac, &cur.h, mu)?;
        let gd = cur.grad.dot(&d);
        rec.mu = Some(mu);
        rec.mu_hat = Some(mu);

        let search = armijo_search(
            problem,
            &cur.x,
            cur.psi,
            &d,
            gd,
            d_ref,
            &cfg.line_search,
            &mut p.counters,
        );
        let found = match search {
            Ok(found) => found,
            Err(LineSearchError::Eval(e)) => return Err(e),
            Err(e) => {
                p.trace.push(rec);
                return Ok((Status::LineSearchFailure, Some(e.to_string())));
            }
        };
        rec.alpha = Some(found.alpha);
        rec.inner = Some(found.backtracks);
        p.trace.push(rec);

        let x_next = &cur.x + &d * found.alpha;
        let next = complete_eval(problem, x_next, found.h, &mut p.counters)?;
        d_ref = nonmonotone_update(d_ref, theta, next.psi);
        cur = next;
        p.accept(&cur);
        k += 1;
        p.n_i = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ThetaSchedule;
    use crate::merit::MeritEval;
    use crate::mu::MuStrategy;
    use crate::problem::FnProblem;
    use nalgebra::DMatrix;

    fn scalar_identity() -> impl NlsProblem {
        FnProblem::new("id", 1, 1, |x| x.clone(), |_| DMatrix::identity(1, 1))
    }

    fn cubic() -> impl NlsProblem {
        FnProblem::new(
            "cubic",
            1,
            1,
            |x| x.map(|v| v.powi(3)),
            |x| DMatrix::from_element(1, 1, 3.0 * x[0] * x[0]),
        )
    }

    #[test]
    fn nonmonotone_update_cases() {
        assert_eq!(nonmonotone_update(17.0, 0.0, 2.0), 2.0);
        assert_eq!(nonmonotone_update(4.0, 0.5, 2.0), 3.0);
        assert_eq!(nonmonotone_update(4.0, 0.95, 4.0), 4.0);
    }

    #[test]
    fn full_step_on_quadratic() {
        let p = scalar_identity();
        let params = LineSearchParams::default();
        let mut c = Counters::default();
        let x = DVector::from_element(1, 1.0);
        let d = DVector::from_element(1, -1.0);
        let out = armijo_search(&p, &x, 0.5, &d, -1.0, 0.5, &params, &mut c).unwrap();
        assert_eq!(out.alpha, 1.0);
        assert_eq!(out.backtracks, 0);
        assert_eq!(out.psi, 0.0);
        assert_eq!(c.n_f, 1);
    }

    #[test]
    fn accepted_step_satisfies_condition_on_reevaluation() {
        let p = cubic();
        let cfg = SolverConfig::default();
        let mut c = Counters::default();
        let x = DVector::from_element(1, 1.0);
        let e: MeritEval = eval_merit(&p, &x, &mut c).unwrap();
        let mu = compute_mu(&MuStrategy::adaptive(1.2), 0, e.hnorm, e.gnorm).unwrap();
        let d = solve_lm_system(&e.jac, &e.h, mu).unwrap();
        let gd = e.grad.dot(&d);
        let out = armijo_search(&p, &e.x, e.psi, &d, gd, e.psi, &cfg.line_search, &mut c).unwrap();
        assert_eq!(out.trials.len(), out.backtracks + 1);

        let y = &e.x + &d * out.alpha;
        let psi_y = 0.5 * y[0].powi(6);
        assert!(psi_y <= e.psi + cfg.line_search.sigma * out.alpha * gd);
        assert_eq!(out.alpha, cfg.line_search.alpha_bar * cfg.line_search.rho.powi(out.backtracks as i32));
    }

    #[test]
    fn ascent_direction_is_rejected() {
        let p = scalar_identity();
        let mut c = Counters::default();
        let x = DVector::from_element(1, 1.0);
        let d = DVector::from_element(1, 1.0);
        let err = armijo_search(&p, &x, 0.5, &d, 1.0, 0.5, &LineSearchParams::default(), &mut c).unwrap_err();
        assert!(matches!(err, LineSearchError::NotDescent(_)));
        assert_eq!(c.n_f, 0);
    }

    #[test]
    fn exhausted_backtracking() {
        // Claims a steep slope the function does not have.
        let p = scalar_identity();
        let mut c = Counters::default();
        let params = LineSearchParams {
            max_backtracks: 5,
            ..Default::default()
        };
        let x = DVector::from_element(1, 1.0);
        let d = DVector::from_element(1, 1.0);
        let err = armijo_search(&p, &x, 0.5, &d, -1e6, 0.5, &params, &mut c).unwrap_err();
        match err {
            LineSearchError::Exhausted { backtracks, best } => {
                assert_eq!(backtracks, 5);
                assert_eq!(best.alpha, 0.5f64.powi(5));
            }
            other => panic!("unexpected {other}"),
        }
        assert_eq!(c.n_f, 6);
    }

    #[test]
    fn linear_system_converges_quickly() {
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let bb = b.clone();
        let p = FnProblem::new("shift", 2, 2, move |x| x - &bb, |_| DMatrix::identity(2, 2));
        let r = lmls_solve(&p, &DVector::zeros(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        assert!(r.hnorm_final <= 1e-6);
        assert!(r.n_i < 25, "{} iterations", r.n_i);
        assert!(r.n_f > r.n_i);
        assert_eq!(r.trace.len(), r.n_i + 1);
    }

    #[test]
    fn cubic_reaches_stopping_rule() {
        let r = lmls_solve(&cubic(), &DVector::from_element(1, 1.0), &SolverConfig::default()).unwrap();
        assert!(r.status.is_converged(), "{:?}", r.status);
        assert!(r.hnorm_final <= 1e-6 || r.gnorm_final <= 1e-6);
    }

    #[test]
    fn cubic_residual_only_stop() {
        let cfg = SolverConfig {
            stop_on_gradient: false,
            ..Default::default()
        };
        let r = lmls_solve(&cubic(), &DVector::from_element(1, 1.0), &cfg).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        assert!(r.x_final[0].abs() <= 1e-2);
        assert!(r.x_final[0].abs().powi(3) <= 1e-6);
    }

    #[test]
    fn circle_lands_on_zero_manifold() {
        let p = FnProblem::new(
            "circle",
            2,
            1,
            |x| DVector::from_element(1, x[0] * x[0] + x[1] * x[1] - 1.0),
            |x| DMatrix::from_row_slice(1, 2, &[2.0 * x[0], 2.0 * x[1]]),
        );
        let r = lmls_solve(&p, &DVector::from_vec(vec![2.0, 0.0]), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        let x = &r.x_final;
        assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() <= 1e-6);
    }

    #[test]
    fn monotone_variant_decreases_strictly() {
        let cfg = SolverConfig {
            theta: ThetaSchedule::Constant(0.0),
            ..Default::default()
        };
        let r = lmls_solve(&cubic(), &DVector::from_element(1, 1.5), &cfg).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].psi < w[0].psi);
        }
    }

    #[test]
    fn zero_at_start_stops_immediately() {
        let r = lmls_solve(&cubic(), &DVector::zeros(1), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        assert_eq!(r.n_i, 0);
        assert_eq!(r.n_f, 1);
    }

    #[test]
    fn max_iterations() {
        let cfg = SolverConfig {
            max_iter: 2,
            ..Default::default()
        };
        let r = lmls_solve(&cubic(), &DVector::from_element(1, 1.0), &cfg).unwrap();
        assert_eq!(r.status, Status::MaxIterations);
        assert_eq!(r.n_i, 2);
    }

    #[test]
    fn breakdown_is_a_status() {
        let p = FnProblem::new(
            "blowup",
            1,
            1,
            |x| x.map(|v| if v < 0.5 { f64::INFINITY } else { v }),
            |_| DMatrix::identity(1, 1),
        );
        let r = lmls_solve(&p, &DVector::from_element(1, 1.0), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::NumericalBreakdown);
        assert!(r.message.is_some());
    }

    #[test]
    fn invalid_config_is_an_error() {
        let cfg = SolverConfig {
            mu: MuStrategy::adaptive(-1.0),
            ..Default::default()
        };
        assert!(lmls_solve(&cubic(), &DVector::from_element(1, 1.0), &cfg).is_err());
    }
}

//! Levenberg-Marquardt directions inside a nonmonotone trust-region loop.
//!
//! Instead of a radius, the step length is controlled through a scaling
//! `lambda_k` of the regularisation: `mu_hat_k = max(mu_min, lambda_k mu_k)`.
//! A trial `d_k` is accepted when the nonmonotone ratio
//!
//! ```text
//! r_hat_k = (D_k - psi(x_k + d_k)) / (q_k(0) - q_k(d_k)),   q_k(d) = 0.5 |J d + h|^2
//! ```
//!
//! reaches `upsilon1`; each rejection multiplies `lambda` by `rho1`.

use nalgebra::{DMatrix, DVector};

use crate::config::{SolverConfig, TrustRegionParams};
use crate::driver::{run_solver, Outcome, Progress};
use crate::error::Result;
use crate::linalg::solve_lm_system;
use crate::lmls::nonmonotone_update;
use crate::merit::{complete_eval, eval_merit, eval_residual};
use crate::mu::compute_mu;
use crate::problem::NlsProblem;
use crate::report::{SolveReport, Status};
use crate::stop::check_stop_norms;

const MIN_PREDICTED: f64 = 1e-300;

/// `q(0) - q(d) = 0.5 |h|^2 - 0.5 |J d + h|^2`.
pub fn predicted_reduction(jac: &DMatrix<f64>, h: &DVector<f64>, d: &DVector<f64>) -> f64 {
    // -(h^T J d) - 0.5 |J d|^2 avoids cancelling two nearly equal squares.
    let jd = jac * d;
    -h.dot(&jd) - 0.5 * jd.norm_squared()
}

/// Nonmonotone ratio `(D - psi_trial) / pred`.
pub fn ratio_hat(d_ref: f64, psi_trial: f64, pred: f64) -> Option<f64> {
    if pred <= MIN_PREDICTED {
        return None;
    }
    Some((d_ref - psi_trial) / pred)
}

/// Three-case update of the regularisation scale after a ratio `r_hat`.
pub fn lambda_update(lambda: f64, r_hat: f64, params: &TrustRegionParams) -> f64 {
    if r_hat < params.upsilon1 {
        params.rho1 * lambda
    } else if r_hat < params.upsilon2 {
        lambda
    } else {
        params.rho2 * lambda
    }
}

/// Solves `h(x) = 0` with the trust-region Levenberg-Marquardt method.
pub fn lmtr_solve(problem: &dyn NlsProblem, x0: &DVector<f64>, cfg: &SolverConfig) -> Result<SolveReport> {
    lmtr_solve_named("lmtr", problem, x0, cfg)
}

pub(crate) fn lmtr_solve_named(
    name: &str,
    problem: &dyn NlsProblem,
    x0: &DVector<f64>,
    cfg: &SolverConfig,
) -> Result<SolveReport> {
    run_solver(name, problem, x0, cfg, |p| lmtr_loop(problem, x0, cfg, p))
}

fn lmtr_loop(problem: &dyn NlsProblem, x0: &DVector<f64>, cfg: &SolverConfig, p: &mut Progress) -> Outcome {
    let tr = &cfg.trust_region;
    let mut cur = eval_merit(problem, x0, &mut p.counters)?;
    p.accept(&cur);
    let (hnorm0, gnorm0) = (cur.hnorm, cur.gnorm);
    let mut d_ref = cur.psi;
    let mut lambda = tr.lambda0;
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
        rec.mu = Some(mu);
        let mut rejected = 0;
        let (d, h_trial, mu_hat, r_hat, pred) = loop {
            let mu_hat = tr.mu_min.max(lambda * mu);
            let d = solve_lm_system(&cur.jac, &cur.h, mu_hat)?;
            let pred = predicted_reduction(&cur.jac, &cur.h, &d);
            if pred <= MIN_PREDICTED {
                rec.mu_hat = Some(mu_hat);
                rec.lambda = Some(lambda);
                rec.inner = Some(rejected);
                p.trace.push(rec);
                return Ok((
                    Status::InnerLoopFailure,
                    Some(format!("predicted reduction {pred:e} vanished at lambda = {lambda:e}")),
                ));
            }
            let (h_trial, psi_trial) = eval_residual(problem, &(&cur.x + &d), &mut p.counters)?;
            let r_hat = ratio_hat(d_ref, psi_trial, pred).expect("pred checked above");
            if r_hat >= tr.upsilon1 {
                break (d, h_trial, mu_hat, r_hat, pred);
            }
            if rejected == tr.max_inner {
                rec.mu_hat = Some(mu_hat);
                rec.lambda = Some(lambda);
                rec.inner = Some(rejected);
                p.trace.push(rec);
                return Ok((
                    Status::InnerLoopFailure,
                    Some(format!("{rejected} rejected trials, last ratio {r_hat:e}")),
                ));
            }
            rejected += 1;
            lambda *= tr.rho1;
        };
        let lambda_next = lambda_update(lambda, r_hat, tr);
        rec.mu_hat = Some(mu_hat);
        rec.alpha = Some(1.0);
        rec.lambda = Some(lambda);
        rec.lambda_next = Some(lambda_next);
        rec.r_hat = Some(r_hat);
        rec.pred = Some(pred);
        rec.inner = Some(rejected);
        p.trace.push(rec);

        let next = complete_eval(problem, &cur.x + &d, h_trial, &mut p.counters)?;
        d_ref = nonmonotone_update(d_ref, theta, next.psi);
        lambda = lambda_next;
        cur = next;
        p.accept(&cur);
        k += 1;
        p.n_i = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::FnProblem;

    #[test]
    fn predicted_reduction_cases() {
        let j = DMatrix::identity(2, 2);
        let h = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(predicted_reduction(&j, &h, &DVector::zeros(2)), 0.0);
        let d = DVector::from_vec(vec![-0.5, 0.0]);
        assert!((predicted_reduction(&j, &h, &d) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn predicted_reduction_lower_bound() {
        let j = DMatrix::from_row_slice(3, 2, &[1.0, -0.5, 0.3, 2.0, -1.1, 0.4]);
        let h = DVector::from_vec(vec![0.7, -1.3, 0.2]);
        let mu = 0.3;
        let d = solve_lm_system(&j, &h, mu).unwrap();
        let g = j.tr_mul(&h);
        let jn = j.clone().svd(false, false).singular_values.max();
        let pred = predicted_reduction(&j, &h, &d);
        assert!(pred >= g.norm_squared() / (2.0 * (jn * jn + mu)));
        assert!(pred <= (0.5 * jn * jn + mu) * d.norm_squared());
    }

    #[test]
    fn ratio_cases() {
        // Perfect model with monotone reference.
        let psi = 2.0;
        let pred = 0.75;
        assert_eq!(ratio_hat(psi, psi - pred, pred), Some(1.0));
        assert_eq!(ratio_hat(psi + 1.0, psi, 2.0), Some(0.5));
        assert_eq!(ratio_hat(1.0, 0.5, 0.0), None);
        assert_eq!(ratio_hat(1.0, 0.5, -1.0), None);
    }

    #[test]
    fn nonmonotone_ratio_dominates_monotone_ratio() {
        let (psi, d_ref, trial, pred) = (1.0, 1.4, 1.2, 0.3);
        let r_mono = ratio_hat(psi, trial, pred).unwrap();
        let r_hat = ratio_hat(d_ref, trial, pred).unwrap();
        assert!(r_hat >= r_mono);
    }

    #[test]
    fn lambda_branches() {
        let tr = TrustRegionParams::default();
        assert_eq!(lambda_update(1.0, 1e-5, &tr), 2.0);
        assert_eq!(lambda_update(1.0, 0.5, &tr), 1.0);
        assert_eq!(lambda_update(1.0, 0.95, &tr), 0.5);
        assert_eq!(lambda_update(1.0, 1e-4, &tr), 1.0);
        assert_eq!(lambda_update(1.0, 0.9, &tr), 0.5);
    }

    #[test]
    fn linear_residual_accepts_every_step() {
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let bb = b.clone();
        let p = FnProblem::new("shift", 2, 2, move |x| x - &bb, |_| DMatrix::identity(2, 2));
        let r = lmtr_solve(&p, &DVector::zeros(2), &SolverConfig::default()).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        for rec in &r.trace[..r.trace.len() - 1] {
            assert_eq!(rec.inner, Some(0));
            assert!(rec.r_hat.unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn cubic_converges() {
        let p = FnProblem::new(
            "cubic",
            1,
            1,
            |x| x.map(|v| v.powi(3)),
            |x| DMatrix::from_element(1, 1, 3.0 * x[0] * x[0]),
        );
        let r = lmtr_solve(&p, &DVector::from_element(1, 1.0), &SolverConfig::default()).unwrap();
        assert!(r.status.is_converged());
        let cfg = SolverConfig {
            stop_on_gradient: false,
            ..Default::default()
        };
        let r = lmtr_solve(&p, &DVector::from_element(1, 1.0), &cfg).unwrap();
        assert_eq!(r.status, Status::ConvergedResidual);
        assert!(r.x_final[0].abs().powi(3) <= 1e-6);
    }

    #[test]
    fn mu_hat_respects_floor() {
        let p = FnProblem::new(
            "cubic",
            1,
            1,
            |x| x.map(|v| v.powi(3)),
            |x| DMatrix::from_element(1, 1, 3.0 * x[0] * x[0]),
        );
        let r = lmtr_solve(&p, &DVector::from_element(1, 1.0), &SolverConfig::default()).unwrap();
        for rec in &r.trace {
            if let Some(mh) = rec.mu_hat {
                assert!(mh >= 1e-8);
            }
        }
    }
}

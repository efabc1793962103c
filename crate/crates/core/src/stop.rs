use crate::merit::MeritEval;
use crate::report::Status;

/// Stopping test: residual small, or gradient small, each measured against
/// `max(eps, rel * value at x0)`.
pub fn check_stop(eval: &MeritEval, eval0: &MeritEval, eps: f64, rel: f64) -> Option<Status> {
    check_stop_norms(eval.hnorm, eval.gnorm, eval0.hnorm, eval0.gnorm, eps, rel, true)
}

pub(crate) fn check_stop_norms(
    hnorm: f64,
    gnorm: f64,
    hnorm0: f64,
    gnorm0: f64,
    eps: f64,
    rel: f64,
    use_gradient: bool,
) -> Option<Status> {
    if hnorm <= eps.max(rel * hnorm0) {
        Some(Status::ConvergedResidual)
    } else if use_gradient && gnorm <= eps.max(rel * gnorm0) {
        Some(Status::ConvergedGradient)
    } else {
        None
    }
}

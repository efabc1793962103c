//! The merit function `psi(x) = 0.5 * |h(x)|^2` and its gradient `J^T h`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{check_point, NlsProblem};

/// Oracle call counters for one solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Residual evaluations.
    pub n_f: usize,
    /// Jacobian evaluations.
    pub n_j: usize,
}

/// Everything the solvers need to know about a point.
#[derive(Debug, Clone)]
pub struct MeritEval {
    pub x: DVector<f64>,
    pub h: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub psi: f64,
    pub grad: DVector<f64>,
    pub hnorm: f64,
    pub gnorm: f64,
}

/// Residual-only evaluation, used for trial points.
pub fn eval_residual(
    problem: &dyn NlsProblem,
    x: &DVector<f64>,
    counters: &mut Counters,
) -> Result<(DVector<f64>, f64)> {
    check_point(problem, x)?;
    counters.n_f += 1;
    let h = problem.residual(x)?;
    if h.len() != problem.dim_h() {
        return Err(Error::Dimension(format!(
            "{}: residual has length {}, expected {}",
            problem.name(),
            h.len(),
            problem.dim_h()
        )));
    }
    if let Some(i) = h.iter().position(|v| !v.is_finite()) {
        return Err(Error::breakdown(
            format!("{}: residual component {i} is not finite", problem.name()),
            x.as_slice(),
        ));
    }
    let psi = 0.5 * h.norm_squared();
    if !psi.is_finite() {
        return Err(Error::breakdown(
            format!("{}: merit value overflowed", problem.name()),
            x.as_slice(),
        ));
    }
    Ok((h, psi))
}

/// Full evaluation at `x`: residual, Jacobian, merit value and gradient.
pub fn eval_merit(
    problem: &dyn NlsProblem,
    x: &DVector<f64>,
    counters: &mut Counters,
) -> Result<MeritEval> {
    let (h, _) = eval_residual(problem, x, counters)?;
    complete_eval(problem, x.clone(), h, counters)
}

/// Adds the Jacobian and gradient to an already evaluated residual.
pub fn complete_eval(
    problem: &dyn NlsProblem,
    x: DVector<f64>,
    h: DVector<f64>,
    counters: &mut Counters,
) -> Result<MeritEval> {
    counters.n_j += 1;
    let jac = problem.jacobian(&x)?;
    if jac.shape() != (problem.dim_h(), problem.dim_x()) {
        return Err(Error::Dimension(format!(
            "{}: Jacobian is {}x{}, expected {}x{}",
            problem.name(),
            jac.nrows(),
            jac.ncols(),
            problem.dim_h(),
            problem.dim_x()
        )));
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::breakdown(
            format!("{}: Jacobian has non-finite entries", problem.name()),
            x.as_slice(),
        ));
    }
    let grad = jac.tr_mul(&h);
    let hnorm = h.norm();
    let gnorm = grad.norm();
    if !gnorm.is_finite() {
        return Err(Error::breakdown(
            format!("{}: gradient overflowed", problem.name()),
            x.as_slice(),
        ));
    }
    Ok(MeritEval {
        psi: 0.5 * h.norm_squared(),
        x,
        h,
        jac,
        grad,
        hnorm,
        gnorm,
    })
}

//! Central finite differences, used to check analytic Jacobians.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::NlsProblem;

/// Default step `1e-6 * max(1, |x|)`.
pub fn default_step(x: &DVector<f64>) -> f64 {
    1e-6 * x.norm().max(1.0)
}

/// `(h(x + s e_i) - h(x - s e_i)) / (2 s)` for every column `i`.
pub fn fd_jacobian(problem: &dyn NlsProblem, x: &DVector<f64>, step: Option<f64>) -> Result<DMatrix<f64>> {
    let s = step.unwrap_or_else(|| default_step(x));
    if !(s > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {s}")));
    }
    let m = problem.dim_x();
    let mut jac = DMatrix::zeros(problem.dim_h(), m);
    let mut xp = x.clone();
    for i in 0..m {
        xp[i] = x[i] + s;
        let hp = problem.residual(&xp)?;
        xp[i] = x[i] - s;
        let hm = problem.residual(&xp)?;
        xp[i] = x[i];
        jac.set_column(i, &((hp - hm) / (2.0 * s)));
    }
    Ok(jac)
}

/// `|J - J_fd|_F / max(1, |J|_F)` at `x`.
pub fn jacobian_error(problem: &dyn NlsProblem, x: &DVector<f64>) -> Result<f64> {
    let analytic = problem.jacobian(x)?;
    let fd = fd_jacobian(problem, x, None)?;
    Ok((&analytic - fd).norm() / analytic.norm().max(1.0))
}

/// Largest [`jacobian_error`] over `points` uniform samples from `[-1, 1]^m`.
pub fn max_jacobian_error(problem: &dyn NlsProblem, points: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..points {
        let x = DVector::from_fn(problem.dim_x(), |_, _| rng.random_range(-1.0..=1.0));
        worst = worst.max(jacobian_error(problem, &x)?);
    }
    Ok(worst)
}

//! The regularised normal equations `(J^T J + mu I) d = -J^T h`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const CG_TOL: f64 = 1e-12;

/// Levenberg-Marquardt direction for Jacobian `jac` (`n x m`), residual `h`
/// and regularisation `mu > 0`.
///
/// Dense Cholesky with one step of iterative refinement. If the factorization
/// breaks down (only possible when `mu` is lost in round-off against `J^T J`)
/// the system is solved with conjugate gradients instead.
pub fn solve_lm_system(jac: &DMatrix<f64>, h: &DVector<f64>, mu: f64) -> Result<DVector<f64>> {
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::Config(format!("LM parameter must be positive and finite, got {mu}")));
    }
    if jac.nrows() != h.len() {
        return Err(Error::Dimension(format!(
            "Jacobian has {} rows but residual has length {}",
            jac.nrows(),
            h.len()
        )));
    }
    let m = jac.ncols();
    let rhs = -jac.tr_mul(h);
    let mut a = jac.tr_mul(jac);
    for i in 0..m {
        a[(i, i)] += mu;
    }

    let d = match a.clone().cholesky() {
        Some(chol) => {
            let mut d = chol.solve(&rhs);
            let r = &rhs - &a * &d;
            d += chol.solve(&r);
            d
        }
        None => {
            log::debug!("cholesky failed at mu = {mu:e}; falling back to conjugate gradients");
            conjugate_gradient(&a, &rhs, CG_TOL, 10 * m.max(10))
        }
    };
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::breakdown("LM system produced a non-finite direction", &[]));
    }
    Ok(d)
}

/// `|(J^T J + mu I) d + J^T h|`, the residual of the LM system.
pub fn lm_system_residual(jac: &DMatrix<f64>, h: &DVector<f64>, mu: f64, d: &DVector<f64>) -> f64 {
    let jd = jac * d;
    (jac.tr_mul(&jd) + d * mu + jac.tr_mul(h)).norm()
}

/// Conjugate gradients for a symmetric positive definite `a`, started at zero.
/// Stops when the residual drops below `tol * max(1, |b|)`.
pub fn conjugate_gradient(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64, max_iter: usize) -> DVector<f64> {
    let mut x = DVector::zeros(b.len());
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.norm_squared();
    let target = tol * b.norm().max(1.0);
    for _ in 0..max_iter {
        if rr.sqrt() <= target {
            break;
        }
        let ap = a * &p;
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rr_new = r.norm_squared();
        p = &r + &p * (rr_new / rr);
        rr = rr_new;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_jacobian() {
        let d = solve_lm_system(&DMatrix::identity(2, 2), &DVector::from_vec(vec![1.0, 0.0]), 1.0).unwrap();
        assert!((d[0] + 0.5).abs() < 1e-15);
        assert_eq!(d[1], 0.0);
    }

    #[test]
    fn zero_jacobian_gives_zero_step() {
        let d = solve_lm_system(&DMatrix::zeros(3, 2), &DVector::from_vec(vec![1.0, -2.0, 3.0]), 1.0).unwrap();
        assert_eq!(d, DVector::zeros(2));
    }

    #[test]
    fn rejects_nonpositive_mu() {
        let j = DMatrix::identity(2, 2);
        let h = DVector::zeros(2);
        assert!(matches!(solve_lm_system(&j, &h, 0.0), Err(Error::Config(_))));
        assert!(matches!(solve_lm_system(&j, &h, -1.0), Err(Error::Config(_))));
    }

    #[test]
    fn matches_adjugate_inverse() {
        let j = DMatrix::from_row_slice(3, 2, &[0.3, -1.2, 2.0, 0.7, -0.4, 1.1]);
        let h = DVector::from_vec(vec![0.5, -1.5, 2.5]);
        let mu = 0.1;
        // Explicit 2x2 inverse via the adjugate.
        let mut a = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                a[r][c] = (0..3).map(|i| j[(i, r)] * j[(i, c)]).sum::<f64>();
            }
            a[r][r] += mu;
        }
        let g: Vec<f64> = (0..2).map(|c| (0..3).map(|i| j[(i, c)] * h[i]).sum()).collect();
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let expected = [
            -(a[1][1] * g[0] - a[0][1] * g[1]) / det,
            -(-a[1][0] * g[0] + a[0][0] * g[1]) / det,
        ];
        let d = solve_lm_system(&j, &h, mu).unwrap();
        for i in 0..2 {
            assert!((d[i] - expected[i]).abs() <= 1e-12 * expected[i].abs().max(1.0));
        }
    }

    #[test]
    fn cg_solves_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = conjugate_gradient(&a, &b, 1e-14, 50);
        assert!((&a * &x - &b).norm() < 1e-12);
    }

    fn instance() -> impl Strategy<Value = (DMatrix<f64>, DVector<f64>, f64)> {
        (1usize..=8, 1usize..=8).prop_flat_map(|(n, m)| {
            (
                proptest::collection::vec(-3.0f64..3.0, n * m),
                proptest::collection::vec(-3.0f64..3.0, n),
                -4.0f64..1.0,
            )
                .prop_map(move |(j, h, lmu)| {
                    (DMatrix::from_vec(n, m, j), DVector::from_vec(h), 10f64.powf(lmu))
                })
        })
    }

    proptest! {
        #[test]
        fn direction_is_descent_and_accurate((j, h, mu) in instance()) {
            let d = solve_lm_system(&j, &h, mu).unwrap();
            let g = j.tr_mul(&h);
            let res = lm_system_residual(&j, &h, mu, &d);
            prop_assert!(res <= 1e-10 * g.norm().max(1.0));
            if g.norm() > 0.0 {
                prop_assert!(g.dot(&d) < 0.0);
            }
        }

        #[test]
        fn direction_minimises_subproblem((j, h, mu) in instance()) {
            let phi = |d: &DVector<f64>| (&j * d + &h).norm_squared() + mu * d.norm_squared();
            let d = solve_lm_system(&j, &h, mu).unwrap();
            let base = phi(&d);
            for i in 0..d.len() {
                for s in [-1e-4, 1e-4] {
                    let mut e = d.clone();
                    e[i] += s;
                    prop_assert!(base <= phi(&e) + 1e-8);
                }
            }
        }
    }
}

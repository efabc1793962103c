//! Small analytic test problems with known zeros.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::problem::{NlsProblem, ProblemInstance};
use crate::problems::bio::{chain_network, BioNetwork, MoietyTotals, SparseIntMatrix};

pub const BUILTIN_NAMES: [&str; 7] = [
    "linear",
    "cubic",
    "circle",
    "rosenbrock_residual",
    "exp_monotone",
    "bio_ab",
    "bio_chain3",
];

/// `h(x) = A x - b`.
#[derive(Debug, Clone)]
pub struct Linear {
    name: String,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl Linear {
    pub fn new(name: impl Into<String>, a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!("A has {} rows, b has {}", a.nrows(), b.len())));
        }
        Ok(Self { name: name.into(), a, b })
    }
}

impl NlsProblem for Linear {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim_x(&self) -> usize {
        self.a.ncols()
    }
    fn dim_h(&self) -> usize {
        self.a.nrows()
    }
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.a * x - &self.b)
    }
    fn jacobian(&self, _: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.a.clone())
    }
}

/// `h(x) = x^3` componentwise. The zero is Hölder metrically subregular of
/// order 1/3 and the Jacobian vanishes there.
#[derive(Debug, Clone)]
pub struct Cubic {
    dim: usize,
}

impl NlsProblem for Cubic {
    fn name(&self) -> &str {
        "cubic"
    }
    fn dim_x(&self) -> usize {
        self.dim
    }
    fn dim_h(&self) -> usize {
        self.dim
    }
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.map(|v| v * v * v))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal(&x.map(|v| 3.0 * v * v)))
    }
}

/// `h(x) = x1^2 + x2^2 - 1`: the whole unit circle is a zero.
#[derive(Debug, Clone)]
pub struct Circle;

impl NlsProblem for Circle {
    fn name(&self) -> &str {
        "circle"
    }
    fn dim_x(&self) -> usize {
        2
    }
    fn dim_h(&self) -> usize {
        1
    }
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_element(1, x[0] * x[0] + x[1] * x[1] - 1.0))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(1, 2, &[2.0 * x[0], 2.0 * x[1]]))
    }
}

/// `h(x) = (10 (x2 - x1^2), 1 - x1)`, zero at `(1, 1)` with a nonsingular
/// Jacobian there.
#[derive(Debug, Clone)]
pub struct RosenbrockResidual;

impl NlsProblem for RosenbrockResidual {
    fn name(&self) -> &str {
        "rosenbrock_residual"
    }
    fn dim_x(&self) -> usize {
        2
    }
    fn dim_h(&self) -> usize {
        2
    }
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(vec![10.0 * (x[1] - x[0] * x[0]), 1.0 - x[0]]))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_row_slice(2, 2, &[-20.0 * x[0], 10.0, -1.0, 0.0]))
    }
}

/// `h(x) = exp(x) - 1` componentwise, a strictly monotone mapping.
#[derive(Debug, Clone)]
pub struct ExpMonotone {
    dim: usize,
}

impl ExpMonotone {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl NlsProblem for ExpMonotone {
    fn name(&self) -> &str {
        "exp_monotone"
    }
    fn dim_x(&self) -> usize {
        self.dim
    }
    fn dim_h(&self) -> usize {
        self.dim
    }
    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.map(f64::exp_m1))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_diagonal(&x.map(f64::exp)))
    }
}

/// `A <=> B` with `kf = kr = 1` and `l0 = 2`; steady state `c = (1, 1)`.
pub fn bio_ab() -> BioNetwork {
    BioNetwork::new(
        "bio_ab",
        SparseIntMatrix::from_dense(&[&[1], &[0]]),
        SparseIntMatrix::from_dense(&[&[0], &[1]]),
        DVector::zeros(2),
        MoietyTotals::Direct(DVector::from_element(1, 2.0)),
    )
    .expect("bio_ab is a valid network")
}

/// `A <=> B <=> C` with unit rates and totals from `c0 = (1, 1, 1)`.
pub fn bio_chain3() -> BioNetwork {
    chain_network("bio_chain3", 3, DVector::from_element(3, 1.0)).expect("bio_chain3 is a valid network")
}

/// Looks up a built-in problem together with its standard starting point.
pub fn builtin_problem(name: &str) -> Result<ProblemInstance> {
    let v = |xs: &[f64]| DVector::from_column_slice(xs);
    let (problem, x0): (Arc<dyn NlsProblem>, DVector<f64>) = match name {
        "linear" => (
            Arc::new(Linear::new(
                "linear",
                DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]),
                v(&[1.0, 2.0, 3.0]),
            )?),
            DVector::zeros(3),
        ),
        "cubic" => (Arc::new(Cubic { dim: 1 }), v(&[1.0])),
        "circle" => (Arc::new(Circle), v(&[2.0, 0.0])),
        "rosenbrock_residual" => (Arc::new(RosenbrockResidual), v(&[-1.2, 1.0])),
        "exp_monotone" => (Arc::new(ExpMonotone::new(3)), v(&[1.0, -1.5, 0.5])),
        "bio_ab" => (Arc::new(bio_ab()), v(&[1.0, -1.0])),
        "bio_chain3" => (Arc::new(bio_chain3()), v(&[1.0, -1.0, 0.5])),
        _ => {
            return Err(Error::UnknownProblem {
                name: name.to_string(),
                available: BUILTIN_NAMES.join(", "),
            })
        }
    };
    ProblemInstance::new(problem, x0)
}

/// All built-ins, in [`BUILTIN_NAMES`] order.
pub fn builtin_suite() -> Vec<ProblemInstance> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin_problem(n).expect("built-in names resolve"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::fd::max_jacobian_error;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_name_resolves() {
        for name in BUILTIN_NAMES {
            let p = builtin_problem(name).unwrap();
            assert_eq!(p.name(), name);
            assert_eq!(p.x0.len(), p.problem.dim_x());
        }
    }

    #[test]
    fn unknown_name_lists_alternatives() {
        let err = builtin_problem("nope").unwrap_err().to_string();
        assert!(err.contains("rosenbrock_residual"));
    }

    #[test]
    fn analytic_jacobians_match_fd() {
        for p in builtin_suite() {
            let e = max_jacobian_error(p.problem.as_ref(), 10, 7).unwrap();
            assert!(e <= 1e-5, "{}: {e:e}", p.name());
        }
    }

    #[test]
    fn cubic_zero_is_degenerate() {
        let p = Cubic { dim: 1 };
        assert_eq!(p.residual(&DVector::zeros(1)).unwrap()[0], 0.0);
        assert_eq!(p.jacobian(&DVector::zeros(1)).unwrap()[(0, 0)], 0.0);
    }

    #[test]
    fn exp_is_strictly_monotone() {
        let p = ExpMonotone::new(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let y = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let dh = p.residual(&x).unwrap() - p.residual(&y).unwrap();
            assert!(dh.dot(&(&x - &y)) > 0.0);
        }
    }
}

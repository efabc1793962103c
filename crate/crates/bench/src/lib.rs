//! Fixtures for the criterion benchmarks.

use holm::nalgebra::{DMatrix, DVector};
use holm::problems::{builtin_suite, chain_network};
use holm::{ProblemInstance, Result};
use std::sync::Arc;

/// Linear chain `A1 <=> ... <=> Am` with unit rates, started from zero.
pub fn chain_instance(species: usize) -> Result<ProblemInstance> {
    let c0 = DVector::from_fn(species, |i, _| 1.0 + (i % 3) as f64);
    let net = chain_network(&format!("chain{species}"), species, c0)?;
    ProblemInstance::new(Arc::new(net), DVector::zeros(species))
}

/// Deterministic dense `(J, h)` pair for the linear-solve benchmark.
pub fn dense_system(n: usize, m: usize) -> (DMatrix<f64>, DVector<f64>) {
    let jac = DMatrix::from_fn(n, m, |i, j| ((i * 7 + j * 13) % 11) as f64 / 5.0 - 1.0);
    let h = DVector::from_fn(n, |i, _| ((i * 5) % 7) as f64 - 3.0);
    (jac, h)
}

pub fn suite() -> Vec<ProblemInstance> {
    builtin_suite()
}

#[cfg(test)]
mod tests {
    use super::*;
    use holm::{Solver, SolverConfig};

    #[test]
    fn chain_fixture_solves() {
        let inst = chain_instance(20).unwrap();
        assert_eq!(inst.problem.dim_x(), 20);
        let rep = Solver::Lmtr.solve(inst.problem.as_ref(), &inst.x0, &SolverConfig::default()).unwrap();
        assert!(rep.status.is_converged());
    }

    #[test]
    fn dense_system_shape() {
        let (j, h) = dense_system(6, 4);
        assert_eq!((j.nrows(), j.ncols(), h.len()), (6, 4, 6));
    }
}

//! Residual mappings `h: R^m -> R^n` and their Jacobians.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Evaluation oracle for a nonlinear least-squares problem.
///
/// `jacobian` returns the `n x m` matrix whose row `i` is the gradient of
/// `h_i`. Implementations must be immutable after construction; the
/// benchmark harness shares them across worker threads.
pub trait NlsProblem: Send + Sync {
    fn name(&self) -> &str;

    /// Dimension of the variable `x`.
    fn dim_x(&self) -> usize;

    /// Dimension of the residual `h(x)`.
    fn dim_h(&self) -> usize;

    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>>;

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// A problem paired with the starting point it is normally solved from.
#[derive(Clone)]
pub struct ProblemInstance {
    pub problem: Arc<dyn NlsProblem>,
    pub x0: DVector<f64>,
}

impl ProblemInstance {
    pub fn new(problem: Arc<dyn NlsProblem>, x0: DVector<f64>) -> Result<Self> {
        check_point(problem.as_ref(), &x0)?;
        Ok(Self { problem, x0 })
    }

    pub fn name(&self) -> &str {
        self.problem.name()
    }
}

impl std::fmt::Debug for ProblemInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemInstance")
            .field("name", &self.problem.name())
            .field("x0", &self.x0.as_slice())
            .finish()
    }
}

pub(crate) fn check_point(problem: &dyn NlsProblem, x: &DVector<f64>) -> Result<()> {
    if x.len() != problem.dim_x() {
        return Err(Error::Dimension(format!(
            "{}: point has length {}, expected {}",
            problem.name(),
            x.len(),
            problem.dim_x()
        )));
    }
    Ok(())
}

/// Residual mapping given by two closures. Handy for tests and small
/// hand-written systems.
pub struct FnProblem<R, J> {
    name: String,
    dim_x: usize,
    dim_h: usize,
    residual: R,
    jacobian: J,
}

impl<R, J> FnProblem<R, J>
where
    R: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    pub fn new(name: impl Into<String>, dim_x: usize, dim_h: usize, residual: R, jacobian: J) -> Self {
        Self {
            name: name.into(),
            dim_x,
            dim_h,
            residual,
            jacobian,
        }
    }
}

impl<R, J> NlsProblem for FnProblem<R, J>
where
    R: Fn(&DVector<f64>) -> DVector<f64> + Send + Sync,
    J: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync,
{
    fn name(&self) -> &str {
        &self.name
    }

    fn dim_x(&self) -> usize {
        self.dim_x
    }

    fn dim_h(&self) -> usize {
        self.dim_h
    }

    fn residual(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((self.residual)(x))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok((self.jacobian)(x))
    }
}

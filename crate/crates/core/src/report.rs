use serde::{Deserialize, Serialize};

/// How a solve ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    ConvergedResidual,
    ConvergedGradient,
    MaxIterations,
    LineSearchFailure,
    InnerLoopFailure,
    NumericalBreakdown,
}

impl Status {
    pub fn is_converged(self) -> bool {
        matches!(self, Status::ConvergedResidual | Status::ConvergedGradient)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::ConvergedResidual => "ConvergedResidual",
            Status::ConvergedGradient => "ConvergedGradient",
            Status::MaxIterations => "MaxIterations",
            Status::LineSearchFailure => "LineSearchFailure",
            Status::InnerLoopFailure => "InnerLoopFailure",
            Status::NumericalBreakdown => "NumericalBreakdown",
        }
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ConvergedResidual" => Status::ConvergedResidual,
            "ConvergedGradient" => Status::ConvergedGradient,
            "MaxIterations" => Status::MaxIterations,
            "LineSearchFailure" => Status::LineSearchFailure,
            "InnerLoopFailure" => Status::InnerLoopFailure,
            "NumericalBreakdown" => Status::NumericalBreakdown,
            other => return Err(format!("unknown status `{other}`")),
        })
    }
}

/// One row of the per-iteration trace.
///
/// Every iterate `x_k` gets a record, including the final one; step fields
/// are `None` on the final record since no step was taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub psi: f64,
    pub hnorm: f64,
    pub gnorm: f64,
    /// Nonmonotone reference value `D_k`.
    pub d_ref: f64,
    /// `theta_k`, the weight used to form `D_{k+1}`.
    pub theta: f64,
    /// Raw regularisation parameter `mu_k`.
    pub mu: Option<f64>,
    /// Regularisation used for the accepted direction (`mu_hat_k` for the
    /// trust-region driver, `mu_k` for the line search).
    pub mu_hat: Option<f64>,
    /// Accepted step size (line search only).
    pub alpha: Option<f64>,
    /// `lambda` that produced the accepted step (trust region only).
    pub lambda: Option<f64>,
    /// `lambda_{k+1}` (trust region only).
    pub lambda_next: Option<f64>,
    /// Nonmonotone ratio of the accepted step (trust region only).
    pub r_hat: Option<f64>,
    /// Predicted reduction of the accepted step (trust region only).
    pub pred: Option<f64>,
    /// Backtracks (line search) or rejected trials (trust region).
    pub inner: Option<usize>,
    pub x: Option<Vec<f64>>,
}

impl IterRecord {
    pub(crate) fn at(k: usize, psi: f64, hnorm: f64, gnorm: f64, d_ref: f64, theta: f64) -> Self {
        Self {
            k,
            psi,
            hnorm,
            gnorm,
            d_ref,
            theta,
            mu: None,
            mu_hat: None,
            alpha: None,
            lambda: None,
            lambda_next: None,
            r_hat: None,
            pred: None,
            inner: None,
            x: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub solver: String,
    pub problem: String,
    pub status: Status,
    pub x_final: Vec<f64>,
    pub hnorm_final: f64,
    pub gnorm_final: f64,
    /// Accepted steps.
    pub n_i: usize,
    /// Residual evaluations.
    pub n_f: usize,
    /// Jacobian evaluations.
    pub n_j: usize,
    /// Wall time of the solve in seconds.
    pub elapsed: f64,
    /// Set when the solve stopped on an error (breakdown, failed search).
    pub message: Option<String>,
    pub trace: Vec<IterRecord>,
}

impl SolveReport {
    pub fn write_trace_csv<W: std::io::Write>(&self, w: W) -> csv::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([
            "k", "psi", "hnorm", "gnorm", "D", "theta", "mu", "mu_hat", "alpha", "lambda",
            "lambda_next", "r_hat", "pred", "inner",
        ])?;
        let opt = |v: Option<f64>| v.map(|v| format!("{v:e}")).unwrap_or_default();
        for r in &self.trace {
            out.write_record([
                r.k.to_string(),
                format!("{:e}", r.psi),
                format!("{:e}", r.hnorm),
                format!("{:e}", r.gnorm),
                format!("{:e}", r.d_ref),
                r.theta.to_string(),
                opt(r.mu),
                opt(r.mu_hat),
                opt(r.alpha),
                opt(r.lambda),
                opt(r.lambda_next),
                opt(r.r_hat),
                opt(r.pred),
                r.inner.map(|v| v.to_string()).unwrap_or_default(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}

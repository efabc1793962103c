//! Choices of the Levenberg-Marquardt regularisation parameter `mu_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights `(xi_k, omega_k)` of the adaptive parameter at iteration `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum XiSchedule {
    /// Fixed weights for every iteration.
    Constant { xi: f64, omega: f64 },
    /// `xi_k = 0.95` while `0.95^k > 1e-2`, then `max(0.95^k, 1e-10)`;
    /// `omega_k = 1 - xi_k`.
    Decaying,
}

const DECAY: f64 = 0.95;
const DECAY_THRESHOLD: f64 = 1e-2;
const XI_FLOOR: f64 = 1e-10;

/// The decaying weight schedule used for the biochemical experiments.
pub fn xi_schedule(k: usize) -> (f64, f64) {
    let pk = DECAY.powi(k.min(i32::MAX as usize) as i32);
    let xi = if pk > DECAY_THRESHOLD {
        DECAY
    } else {
        pk.max(XI_FLOOR)
    };
    (xi, 1.0 - xi)
}

impl XiSchedule {
    pub fn weights(&self, k: usize) -> (f64, f64) {
        match *self {
            XiSchedule::Constant { xi, omega } => (xi, omega),
            XiSchedule::Decaying => xi_schedule(k),
        }
    }

    /// `(xi_min, xi_max, omega_min, omega_max)` over all iterations.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            XiSchedule::Constant { xi, omega } => (xi, xi, omega, omega),
            XiSchedule::Decaying => (XI_FLOOR, DECAY, 1.0 - DECAY, 1.0 - XI_FLOOR),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuStrategy {
    /// `xi_k |h|^eta + omega_k |J^T h|^eta`.
    Adaptive { eta: f64, schedule: XiSchedule },
    /// `|h|^2`.
    Yf,
    /// `|h|`.
    Fy,
    /// `|J^T h|`.
    LevMar,
}

impl Default for MuStrategy {
    fn default() -> Self {
        MuStrategy::Adaptive {
            eta: 1.2,
            schedule: XiSchedule::Decaying,
        }
    }
}

impl MuStrategy {
    pub fn adaptive(eta: f64) -> Self {
        MuStrategy::Adaptive {
            eta,
            schedule: XiSchedule::Decaying,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let MuStrategy::Adaptive { eta, schedule } = self {
            if !(eta.is_finite() && *eta > 0.0) {
                return Err(Error::Config(format!("eta must be positive, got {eta}")));
            }
            let (xi_min, xi_max, om_min, om_max) = schedule.bounds();
            let finite = [xi_min, xi_max, om_min, om_max].iter().all(|v| v.is_finite());
            if !finite || xi_min < 0.0 || om_min < 0.0 || xi_min > xi_max || om_min > om_max {
                return Err(Error::Config(format!(
                    "schedule weights out of range: xi in [{xi_min}, {xi_max}], omega in [{om_min}, {om_max}]"
                )));
            }
            if xi_min + om_min <= 0.0 {
                return Err(Error::Config(
                    "schedule needs xi_min + omega_min > 0".to_string(),
                ));
            }
        }
        Ok(())
    }
}

/// Regularisation parameter at iteration `k` from `|h(x_k)|` and `|J^T h|`.
pub fn compute_mu(strategy: &MuStrategy, k: usize, hnorm: f64, gnorm: f64) -> Result<f64> {
    if !(hnorm.is_finite() && gnorm.is_finite()) || hnorm < 0.0 || gnorm < 0.0 {
        return Err(Error::breakdown(
            format!("mu from non-finite or negative norms ({hnorm}, {gnorm})"),
            &[],
        ));
    }
    let mu = match *strategy {
        MuStrategy::Adaptive { eta, schedule } => {
            let (xi, omega) = schedule.weights(k);
            xi * hnorm.powf(eta) + omega * gnorm.powf(eta)
        }
        MuStrategy::Yf => hnorm * hnorm,
        MuStrategy::Fy => hnorm,
        MuStrategy::LevMar => gnorm,
    };
    Ok(mu)
}

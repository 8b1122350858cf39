//! Parameter advisor for the asynchronous method.
//!
//! Turns a target accuracy, confidence parameters and user-supplied
//! smoothness/Lipschitz estimates into a step size, smoothing radius,
//! iteration count and extrapolation caps that satisfy the convergence
//! conditions. The constants cannot be estimated from observations; they are
//! inputs.

use serde::{Deserialize, Serialize};

use super::estimator::{CyclicCap, WeightCaps};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AdvisorVariant {
    /// Generic networked objective.
    #[default]
    Generic,
    /// Multi-agent LQR with truncated rollouts: tighter radius, and the
    /// rollout truncation error enters the estimate bound.
    Lqr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorInput {
    /// Target accuracy `epsilon`.
    pub eps: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub nu: f64,
    /// Gradient Lipschitz constant.
    pub phi0: f64,
    /// Lipschitz constant of the local costs.
    pub lambda0: f64,
    /// Radius of the neighborhood of the sublevel set.
    pub rho0: f64,
    /// Observation bound constant (`c`, or `c_lqr` for the LQR variant).
    pub c: f64,
    /// Initial cost `f(x^0)`.
    pub f_x0: f64,
    /// Largest scaled local cost at `x^0`.
    pub f0_x0: f64,
    /// Largest cluster size.
    pub n0: usize,
    /// Largest block dimension.
    pub q_plus: usize,
    /// Smallest smoothing radius; defaults to the advised radius.
    #[serde(default)]
    pub r_minus: Option<f64>,
    /// Period of an essentially cyclic schedule, enabling the cyclic caps.
    #[serde(default)]
    pub t0: Option<usize>,
    #[serde(default)]
    pub eps_bar: Option<f64>,
    #[serde(default)]
    pub variant: AdvisorVariant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisorOutput {
    pub iterations: usize,
    pub eta: f64,
    /// Largest admissible smoothing radius.
    pub radius: f64,
    pub weight_caps: WeightCaps,
    /// Uniform bound on the estimated gradient.
    pub delta: f64,
    /// Upper bound on the failure probability.
    pub failure_probability: f64,
    /// Admissible rollout truncation error (LQR variant).
    pub eps_prime: Option<f64>,
    /// Accuracy guaranteed for the cyclic-schedule statement.
    pub eps_hat: Option<f64>,
}

/// `(1/alpha)(2 + gamma + 1/nu + nu gamma)`.
pub fn failure_probability(alpha: f64, gamma: f64, nu: f64) -> f64 {
    (2.0 + gamma + 1.0 / nu + nu * gamma) / alpha
}

pub fn advise_parameters(a: &AdvisorInput) -> Result<AdvisorOutput> {
    let positive = [
        ("eps", a.eps),
        ("alpha", a.alpha),
        ("gamma", a.gamma),
        ("nu", a.nu),
        ("phi0", a.phi0),
        ("rho0", a.rho0),
        ("c", a.c),
        ("f_x0", a.f_x0),
    ];
    for (name, v) in positive {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::arg(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if a.lambda0 < 0.0 || a.f0_x0 < 0.0 {
        return Err(Error::arg("lambda0 and f0_x0 must be nonnegative"));
    }
    if a.n0 == 0 || a.q_plus == 0 {
        return Err(Error::arg("cluster size and block dimension must be at least 1"));
    }
    let need = 2.0 + a.gamma + 1.0 / a.nu + a.nu * a.gamma;
    if a.alpha < need {
        return Err(Error::arg(format!(
            "alpha >= 2 + gamma + 1/nu + nu*gamma is required, but {} < {need}",
            a.alpha
        )));
    }

    let n0 = a.n0 as f64;
    let q_plus = a.q_plus as f64;
    let root = (a.gamma * a.eps / (a.alpha * n0)).sqrt();
    let radius_factor = match a.variant {
        AdvisorVariant::Generic => 2.0,
        AdvisorVariant::Lqr => 4.0,
    };
    let radius = (a.rho0 / 2.0).min(root / (radius_factor * a.phi0));
    let r_minus = a.r_minus.unwrap_or(radius);
    if !(r_minus > 0.0) {
        return Err(Error::arg("r_minus must be positive"));
    }

    let (delta, eps_prime) = match a.variant {
        AdvisorVariant::Generic => (q_plus / r_minus * a.c * (a.f0_x0 + a.lambda0 * a.rho0), None),
        AdvisorVariant::Lqr => {
            let eps_prime = r_minus / (4.0 * q_plus) * root;
            (
                q_plus / r_minus * (a.c * (a.f0_x0 + a.lambda0 * a.rho0) + eps_prime),
                Some(eps_prime),
            )
        }
    };

    let phi = a.phi0;
    let mut eta = (a.rho0 / (2.0 * delta * n0.sqrt()))
        .min(2.0 * a.alpha * a.f_x0 / (a.gamma * a.eps))
        .min(a.gamma * a.eps / (2.0 * a.alpha * n0 * (phi * delta * delta + 4.0 * phi * phi + phi + 4.0)));

    let mut cyclic = None;
    let mut eps_hat = None;
    if let Some(t0) = a.t0 {
        let eps_bar = a
            .eps_bar
            .ok_or_else(|| Error::arg("eps_bar is required together with t0"))?;
        if !(eps_bar > 0.0) {
            return Err(Error::arg("eps_bar must be positive"));
        }
        if t0 == 0 {
            return Err(Error::arg("t0 must be at least 1"));
        }
        if t0 > 1 {
            eta = eta.min(eps_bar / (2.0 * delta * (t0 - 1) as f64 * n0));
        }
        cyclic = Some(CyclicCap { t0, eps_bar });
        eps_hat = Some(2.0 * t0 as f64 * (a.eps + phi * phi * eps_bar * eps_bar));
    }

    let t = (2.0 * a.alpha * a.nu * a.f_x0 / (eta * a.eps)).ceil();
    if !t.is_finite() || t > usize::MAX as f64 {
        return Err(Error::arg(format!("advised iteration count is not representable ({t})")));
    }
    Ok(AdvisorOutput {
        iterations: (t as usize).max(1),
        eta,
        radius,
        weight_caps: WeightCaps { rho0: a.rho0, cyclic },
        delta,
        failure_probability: failure_probability(a.alpha, a.gamma, a.nu),
        eps_prime,
        eps_hat,
    })
}

use nalgebra::{DMatrix, DVector};

use super::local_cost::{quad, LocalCostSpec};
use super::oracle::assemble_closed_loop;
use super::system::MasLqrSystem;
use crate::error::{Error, Result};

/// States whose squared norm exceeds this are treated as divergent.
pub const STATE_GUARD: f64 = 1e16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutResult {
    /// Discounted finite-horizon cost; infinite when the rollout diverged.
    pub value: f64,
    pub diverged: bool,
    /// Squared norm of the state after the last simulated step.
    pub final_sq_norm: f64,
}

/// Simulates `x(t+1) = (A - BK) x(t)`, `u = -K x`, for `horizon` steps and
/// accumulates `sum_t gamma^t stage(x(t), u(t))`.
pub fn rollout<F>(sys: &MasLqrSystem, k: &DMatrix<f64>, x0: &[f64], horizon: usize, stage: F) -> Result<RolloutResult>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let acl = assemble_closed_loop(sys, k)?;
    if x0.len() != acl.nrows() {
        return Err(Error::arg(format!("initial state has length {}, expected {}", x0.len(), acl.nrows())));
    }
    let mut x = DVector::from_column_slice(x0);
    let mut value = 0.0;
    let mut discount = 1.0;
    let gamma = sys.gamma();
    for _ in 0..horizon {
        let u = -(k * &x);
        value += discount * stage(x.as_slice(), u.as_slice());
        discount *= gamma;
        x = &acl * &x;
        let sq = x.norm_squared();
        if !(sq <= STATE_GUARD) {
            return Ok(RolloutResult {
                value: f64::INFINITY,
                diverged: true,
                final_sq_norm: sq,
            });
        }
    }
    Ok(RolloutResult {
        value,
        diverged: false,
        final_sq_norm: x.norm_squared(),
    })
}

/// Observation `H_{i,T_J}`: the local cost of `spec` along a rollout.
pub fn rollout_local_cost(
    sys: &MasLqrSystem,
    k: &DMatrix<f64>,
    x0: &[f64],
    horizon: usize,
    spec: &LocalCostSpec,
) -> Result<RolloutResult> {
    let (n, m) = (sys.state_dim(), sys.input_dim());
    rollout(sys, k, x0, horizon, |x, u| spec.stage_cost(x, u, n, m))
}

/// Global finite-horizon cost along a rollout.
pub fn rollout_global_cost(sys: &MasLqrSystem, k: &DMatrix<f64>, x0: &[f64], horizon: usize) -> Result<RolloutResult> {
    let (q, r) = (sys.q_full(), sys.r_full());
    rollout(sys, k, x0, horizon, |x, u| quad(&q, x) + quad(&r, u))
}

/// Horizon after which the truncated local cost is within `eps_prime` of the
/// infinite-horizon one:
/// `ceil( log(alpha_j0 * lam_max_x0 / (lam_min_sigma * eps_prime)) / (2 (1 - kappa0)) )`,
/// at least 1. `kappa0` bounds the norm of `sqrt(gamma)(A - BK)` and
/// `alpha_j0` bounds the local cost.
pub fn required_horizon(eps_prime: f64, kappa0: f64, alpha_j0: f64, lam_max_x0: f64, lam_min_sigma: f64) -> Result<usize> {
    if !(kappa0 > 0.0 && kappa0 < 1.0) {
        return Err(Error::arg(format!("kappa0 must lie in (0, 1), got {kappa0}")));
    }
    if !(eps_prime > 0.0 && lam_min_sigma > 0.0) || alpha_j0 < 0.0 || lam_max_x0 < 0.0 {
        return Err(Error::arg("horizon inputs must be positive"));
    }
    let arg = alpha_j0 * lam_max_x0 / (lam_min_sigma * eps_prime);
    if arg <= 1.0 {
        return Ok(1);
    }
    let t = arg.ln() / (2.0 * (1.0 - kappa0));
    // absorb rounding in the logarithm so exact integers are not bumped up
    let t = (t - 1e-9 * t.max(1.0)).ceil();
    Ok((t as usize).max(1))
}

/// Constant `c_lqr` with `x0 x0' <= c_lqr Sigma_x` on the whole support.
pub fn c_lqr(sys: &MasLqrSystem) -> f64 {
    let init = sys.initial_state();
    init.max_sq_norm(sys.state_dim() * sys.n_agents()) / init.variance()
}

//! Multi-agent LQR with decoupled dynamics: local costs, distributed gains,
//! rollout observations, asynchronous learning, and model-based oracles.

mod gain;
pub mod io;
mod learn;
mod local_cost;
pub mod oracle;
mod rollout;
mod system;

pub use gain::{DistributedGain, GainPattern};
pub use learn::{
    centralized_zoo_baseline, centralized_zoo_baseline_with, run_async_lqr, run_async_lqr_with, LqrObjective,
};
pub use local_cost::{build_local_costs, solve_mi, support_of, LocalCostSpec};
pub use oracle::{
    assemble_closed_loop, centralized_optimum, exact_cost, exact_gradient, global_cost, is_schur_stable,
    scaled_radius, spectral_radius, CentralizedOptimum,
};
pub use rollout::{c_lqr, required_horizon, rollout, rollout_global_cost, rollout_local_cost, RolloutResult};
pub use system::{block_diag, masked_state_cost, InitialState, MasLqrSystem};

use nalgebra::DMatrix;

use super::gain::{DistributedGain, GainPattern};
use super::local_cost::{build_local_costs, LocalCostSpec};
use super::oracle::{exact_cost, exact_gradient, global_cost, is_schur_stable, scaled_radius};
use super::rollout::{c_lqr, rollout_global_cost, rollout_local_cost};
use super::system::MasLqrSystem;
use crate::error::{Error, Result};
use crate::netgraph::{Clustering, DirectedGraph};
use crate::rng::StreamRng;
use crate::zoo::{
    run_async_zoo_with, run_centralized_zoo_with, AsyncZoo, BlockVector, NetworkedObjective, RunTrace,
    UpdateSchedule, ZooConfig,
};

/// Multi-agent LQR seen as a networked objective over vectorized distributed
/// gains. Agent `i` observes the finite-horizon rollout of its local cost from
/// a shared random initial state. The exact oracles report the
/// infinite-horizon cost and its gradient on the gain pattern (infinite / absent
/// for destabilizing gains).
#[derive(Debug, Clone)]
pub struct LqrObjective {
    sys: MasLqrSystem,
    pattern: GainPattern,
    learning: DirectedGraph,
    specs: Vec<LocalCostSpec>,
    horizon: usize,
}

impl LqrObjective {
    pub fn new(sys: MasLqrSystem, horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::arg("rollout horizon must be at least 1"));
        }
        let pattern = GainPattern::from_sensing(sys.sensing(), sys.state_dim(), sys.input_dim());
        let (learning, specs) = build_local_costs(&sys)?;
        Ok(Self {
            sys,
            pattern,
            learning,
            specs,
            horizon,
        })
    }

    pub fn system(&self) -> &MasLqrSystem {
        &self.sys
    }

    pub fn pattern(&self) -> &GainPattern {
        &self.pattern
    }

    pub fn learning_graph(&self) -> &DirectedGraph {
        &self.learning
    }

    pub fn local_costs(&self) -> &[LocalCostSpec] {
        &self.specs
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn gain(&self, x: &BlockVector) -> Result<DMatrix<f64>> {
        self.pattern.unvectorize(x)
    }

    /// Exact local cost `J_i`.
    pub fn local_cost(&self, i: usize, k: &DMatrix<f64>) -> Result<f64> {
        exact_cost(&self.sys, k, &self.specs[i].q_hat, &self.specs[i].r_hat)
    }

    /// Gradient of the global cost over the gain pattern, vectorized.
    pub fn projected_gradient(&self, k: &DMatrix<f64>) -> Result<BlockVector> {
        let g = exact_gradient(&self.sys, k, &self.sys.q_full(), &self.sys.r_full())?;
        self.pattern.vectorize(&self.pattern.project(&g))
    }

    /// Gradient of `J_i` over the gain pattern, vectorized.
    pub fn projected_local_gradient(&self, i: usize, k: &DMatrix<f64>) -> Result<BlockVector> {
        let g = exact_gradient(&self.sys, k, &self.specs[i].q_hat, &self.specs[i].r_hat)?;
        self.pattern.vectorize(&self.pattern.project(&g))
    }
}

impl NetworkedObjective for LqrObjective {
    fn block_dims(&self) -> Vec<usize> {
        self.pattern.block_dims()
    }

    fn graph(&self) -> &DirectedGraph {
        &self.learning
    }

    fn sample_noise(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.sys.sample_x0(rng)
    }

    fn local_observation(&self, agent: usize, x: &BlockVector, noise: &[f64]) -> f64 {
        let Ok(k) = self.gain(x) else {
            return f64::INFINITY;
        };
        rollout_local_cost(&self.sys, &k, noise, self.horizon, &self.specs[agent])
            .map(|r| r.value)
            .unwrap_or(f64::INFINITY)
    }

    fn global_observation(&self, x: &BlockVector, noise: &[f64]) -> f64 {
        let Ok(k) = self.gain(x) else {
            return f64::INFINITY;
        };
        rollout_global_cost(&self.sys, &k, noise, self.horizon)
            .map(|r| r.value)
            .unwrap_or(f64::INFINITY)
    }

    fn observation_bound(&self) -> f64 {
        c_lqr(&self.sys)
    }

    fn exact_value(&self, x: &BlockVector) -> Option<f64> {
        let k = self.gain(x).ok()?;
        Some(global_cost(&self.sys, &k).unwrap_or(f64::INFINITY))
    }

    fn exact_local_value(&self, agent: usize, x: &BlockVector) -> Option<f64> {
        let k = self.gain(x).ok()?;
        Some(self.local_cost(agent, &k).unwrap_or(f64::INFINITY))
    }

    fn exact_gradient(&self, x: &BlockVector) -> Option<BlockVector> {
        self.projected_gradient(&self.gain(x).ok()?).ok()
    }
}

fn check_initial_gain(obj: &LqrObjective, k0: &DistributedGain) -> Result<()> {
    if k0.pattern() != obj.pattern() {
        return Err(Error::arg("initial gain does not use the sensing pattern of the system"));
    }
    if !is_schur_stable(obj.system(), k0.dense()) {
        let radius = scaled_radius(obj.system(), k0.dense())?;
        return Err(Error::arg(format!(
            "initial gain is not stabilizing (scaled spectral radius {radius:.6})"
        )));
    }
    Ok(())
}

/// Asynchronous distributed learning of a distributed gain from rollouts.
pub fn run_async_lqr(
    obj: &LqrObjective,
    clustering: &Clustering,
    sched: &UpdateSchedule,
    cfg: &ZooConfig,
    k0: &DistributedGain,
    seed: u64,
) -> Result<RunTrace> {
    run_async_lqr_with(obj, clustering, sched, cfg, k0, seed, |_, _| Ok(()))
}

pub fn run_async_lqr_with<F>(
    obj: &LqrObjective,
    clustering: &Clustering,
    sched: &UpdateSchedule,
    cfg: &ZooConfig,
    k0: &DistributedGain,
    seed: u64,
    observe: F,
) -> Result<RunTrace>
where
    F: FnMut(&AsyncZoo<'_, LqrObjective>, usize) -> Result<()>,
{
    check_initial_gain(obj, k0)?;
    run_async_zoo_with(obj, clustering, sched, cfg, &k0.to_vector(), seed, observe)
}

/// Centralized one-point baseline: the whole vectorized gain is perturbed
/// with one sphere sample, the global rollout cost is observed, and `n_avg`
/// such estimates are averaged per step.
pub fn centralized_zoo_baseline(
    obj: &LqrObjective,
    cfg: &ZooConfig,
    k0: &DistributedGain,
    n_avg: usize,
    seed: u64,
) -> Result<RunTrace> {
    centralized_zoo_baseline_with(obj, cfg, k0, n_avg, seed, |_, _| Ok(()))
}

pub fn centralized_zoo_baseline_with<F>(
    obj: &LqrObjective,
    cfg: &ZooConfig,
    k0: &DistributedGain,
    n_avg: usize,
    seed: u64,
    observe: F,
) -> Result<RunTrace>
where
    F: FnMut(&BlockVector, usize) -> Result<()>,
{
    check_initial_gain(obj, k0)?;
    run_centralized_zoo_with(obj, cfg, &k0.to_vector(), n_avg, seed, observe)
}

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::block::{norm, norm_sq, BlockVector};
use super::estimator::{effective_weight, extrapolate, one_point_gradient, sample_unit_sphere, WeightCaps};
use super::objective::NetworkedObjective;
use super::schedule::{validate_schedule, UpdateSchedule};
use super::trace::{IterationRecord, RunTrace};
use crate::error::{Error, Result};
use crate::netgraph::{validate_clustering, Clustering};
use crate::rng::{stream, Purpose, StreamRng};

pub const DEFAULT_GUARD: f64 = 1e8;

fn default_guard() -> f64 {
    DEFAULT_GUARD
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooConfig {
    pub eta: f64,
    /// Smoothing radius per agent.
    pub radii: Vec<f64>,
    /// Base extrapolation weight in `[0, 1)`.
    #[serde(default)]
    pub w_base: f64,
    /// Caps applied to the extrapolation weight; `None` uses `w_base` as is.
    #[serde(default)]
    pub weight_caps: Option<WeightCaps>,
    pub iterations: usize,
    /// Observations above this value are clamped and flagged.
    #[serde(default = "default_guard")]
    pub guard: f64,
    /// Record exact values and gradients when the objective provides them.
    #[serde(default = "default_true")]
    pub record_oracle: bool,
    /// Evaluate agents of the active cluster on the rayon pool.
    #[serde(default)]
    pub parallel: bool,
}

impl ZooConfig {
    pub fn uniform(n_agents: usize, eta: f64, radius: f64, iterations: usize) -> Self {
        Self {
            eta,
            radii: vec![radius; n_agents],
            w_base: 0.0,
            weight_caps: None,
            iterations,
            guard: DEFAULT_GUARD,
            record_oracle: true,
            parallel: false,
        }
    }

    pub fn validate(&self, n_agents: usize) -> Result<()> {
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::arg(format!("step size must be finite and nonnegative, got {}", self.eta)));
        }
        if self.radii.len() != n_agents {
            return Err(Error::arg(format!(
                "{} smoothing radii given for {n_agents} agents",
                self.radii.len()
            )));
        }
        if let Some(r) = self.radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::arg(format!("smoothing radii must be positive, got {r}")));
        }
        if !(0.0..1.0).contains(&self.w_base) {
            return Err(Error::arg(format!("extrapolation weight must lie in [0, 1), got {}", self.w_base)));
        }
        if self.iterations == 0 {
            return Err(Error::arg("at least one iteration is required"));
        }
        if !(self.guard > 0.0) {
            return Err(Error::arg("observation guard must be positive"));
        }
        Ok(())
    }
}

/// Proposed update of one agent: the estimate and the block it would move to.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentUpdate {
    pub agent: usize,
    pub estimate: Vec<f64>,
    pub new_block: Vec<f64>,
    pub observation: f64,
    pub guarded: bool,
}

/// Stepper for the asynchronous cluster-wise zeroth-order method.
///
/// Step `k` draws one noise sample from stream `(seed, Noise, k)`, and agent
/// `i` of the active cluster draws its direction from `(seed, Sphere, i, k)`,
/// so results do not depend on whether agents are evaluated in parallel.
pub struct AsyncZoo<'a, O: NetworkedObjective + ?Sized> {
    obj: &'a O,
    clustering: Clustering,
    cfg: ZooConfig,
    seed: u64,
    x: BlockVector,
    /// Block value at the start of the agent's latest update.
    prev: Vec<Option<Vec<f64>>>,
    k: usize,
    streams: u64,
}

impl<'a, O: NetworkedObjective + ?Sized> AsyncZoo<'a, O> {
    pub fn new(obj: &'a O, clustering: Clustering, cfg: ZooConfig, x0: BlockVector, seed: u64) -> Result<Self> {
        let n = obj.n_agents();
        cfg.validate(n)?;
        if x0.dims() != obj.block_dims() {
            return Err(Error::arg(format!(
                "initial point has block dims {:?}, objective expects {:?}",
                x0.dims(),
                obj.block_dims()
            )));
        }
        let report = validate_clustering(obj.graph(), &clustering);
        if !report.is_valid() {
            return Err(Error::arg(format!(
                "clustering is not valid for the interaction graph (disjoint {}, covers all {}, conflicts {:?})",
                report.disjoint, report.covers_all, report.conflicts
            )));
        }
        Ok(Self {
            obj,
            clustering,
            cfg,
            seed,
            x: x0,
            prev: vec![None; n],
            k: 0,
            streams: 0,
        })
    }

    pub fn x(&self) -> &BlockVector {
        &self.x
    }

    pub fn iteration(&self) -> usize {
        self.k
    }

    pub fn config(&self) -> &ZooConfig {
        &self.cfg
    }

    pub fn clustering(&self) -> &Clustering {
        &self.clustering
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.cfg.eta = eta;
    }

    fn extrapolation_weight(&self, agent: usize, n_i: usize) -> (f64, Option<&[f64]>) {
        let Some(prev) = self.prev[agent].as_deref() else {
            return (0.0, None);
        };
        let cur = self.x.block(agent);
        let delta: f64 = norm(&cur.iter().zip(prev).map(|(a, b)| a - b).collect::<Vec<_>>());
        let w = effective_weight(self.cfg.w_base, delta, self.cfg.eta, n_i, self.cfg.weight_caps.as_ref());
        (w, Some(prev))
    }

    fn agent_update(&self, agent: usize, n_i: usize, noise: &[f64], mut rng: StreamRng) -> Result<AgentUpdate> {
        let (w, prev) = self.extrapolation_weight(agent, n_i);
        let x_hat = extrapolate(self.x.block(agent), prev, w)?;
        let q_i = x_hat.len();
        let r_i = self.cfg.radii[agent];
        let u = sample_unit_sphere(q_i, &mut rng)?;
        let mut probe = self.x.clone();
        for (slot, (a, b)) in probe.block_mut(agent).iter_mut().zip(x_hat.iter().zip(&u)) {
            *slot = a + r_i * b;
        }
        let raw = self.obj.local_observation(agent, &probe, noise);
        let guarded = !(raw <= self.cfg.guard);
        let h = if guarded { self.cfg.guard } else { raw };
        let estimate = one_point_gradient(h, &u, q_i, r_i)?;
        let new_block = x_hat
            .iter()
            .zip(&estimate)
            .map(|(a, g)| a - self.cfg.eta * g)
            .collect();
        Ok(AgentUpdate {
            agent,
            estimate,
            new_block,
            observation: h,
            guarded,
        })
    }

    /// Updates cluster `cluster` would receive from the current iterate when
    /// its noise and directions come from the supplied stream factories.
    pub fn propose_with<FN, FS>(&self, cluster: usize, noise_rng: FN, sphere_rng: FS) -> Result<Vec<AgentUpdate>>
    where
        FN: FnOnce() -> StreamRng,
        FS: Fn(usize) -> StreamRng + Sync,
    {
        let members = self.clustering.cluster(cluster);
        let n_i = members.len();
        let noise = self.obj.sample_noise(&mut noise_rng());
        if self.cfg.parallel && members.len() > 1 {
            members
                .par_iter()
                .map(|&i| self.agent_update(i, n_i, &noise, sphere_rng(i)))
                .collect()
        } else {
            members
                .iter()
                .map(|&i| self.agent_update(i, n_i, &noise, sphere_rng(i)))
                .collect()
        }
    }

    /// A side draw from the current iterate, keyed by `salt`, that does not
    /// touch the run's own streams.
    pub fn propose_repeat(&self, cluster: usize, salt: u64) -> Result<Vec<AgentUpdate>> {
        let (seed, k) = (self.seed, self.k as u64);
        let n = self.obj.n_agents() as u64;
        self.propose_with(
            cluster,
            || stream(seed, Purpose::Repeat, salt * (n + 1), k),
            |i| stream(seed, Purpose::Repeat, salt * (n + 1) + 1 + i as u64, k),
        )
    }

    /// Applies one step of the scheduled update to `cluster`.
    pub fn step(&mut self, cluster: usize) -> Result<IterationRecord> {
        if cluster >= self.clustering.len() {
            return Err(Error::arg(format!("cluster {} does not exist", cluster + 1)));
        }
        let (seed, k) = (self.seed, self.k as u64);
        let members = self.clustering.cluster(cluster).to_vec();

        let (f_exact, grad_sq_active) = if self.cfg.record_oracle {
            let f = self.obj.exact_value(&self.x);
            let g = self
                .obj
                .exact_gradient(&self.x)
                .map(|g| members.iter().map(|&i| norm_sq(g.block(i))).sum());
            (f, g)
        } else {
            (None, None)
        };

        let updates = self.propose_with(
            cluster,
            || stream(seed, Purpose::Noise, k, 0),
            |i| stream(seed, Purpose::Sphere, i as u64, k),
        )?;
        self.streams += 1 + members.len() as u64;

        let mut grad_norms = Vec::with_capacity(updates.len());
        let mut guarded = 0;
        for up in updates {
            self.prev[up.agent] = Some(self.x.block(up.agent).to_vec());
            self.x.set_block(up.agent, &up.new_block)?;
            grad_norms.push((up.agent, norm(&up.estimate)));
            guarded += usize::from(up.guarded);
        }
        let rec = IterationRecord {
            iter: self.k,
            cluster,
            grad_norms,
            f_exact,
            grad_sq_active,
            guarded,
            seed_counter: self.streams,
        };
        self.k += 1;
        Ok(rec)
    }

    pub fn final_value(&self) -> Option<f64> {
        if self.cfg.record_oracle {
            self.obj.exact_value(&self.x)
        } else {
            None
        }
    }

    pub fn into_x(self) -> BlockVector {
        self.x
    }
}

/// Runs the asynchronous method for `cfg.iterations` steps of `sched`.
pub fn run_async_zoo<O: NetworkedObjective + ?Sized>(
    obj: &O,
    clustering: &Clustering,
    sched: &UpdateSchedule,
    cfg: &ZooConfig,
    x0: &BlockVector,
    seed: u64,
) -> Result<RunTrace> {
    run_async_zoo_with(obj, clustering, sched, cfg, x0, seed, |_, _| Ok(()))
}

/// As [`run_async_zoo`], calling `observe` before every step with the stepper
/// positioned at `x^k` (used for side measurements such as repeated draws).
pub fn run_async_zoo_with<O, F>(
    obj: &O,
    clustering: &Clustering,
    sched: &UpdateSchedule,
    cfg: &ZooConfig,
    x0: &BlockVector,
    seed: u64,
    mut observe: F,
) -> Result<RunTrace>
where
    O: NetworkedObjective + ?Sized,
    F: FnMut(&AsyncZoo<'_, O>, usize) -> Result<()>,
{
    if sched.len() != cfg.iterations {
        return Err(Error::arg(format!(
            "schedule has {} steps but {} iterations are configured",
            sched.len(),
            cfg.iterations
        )));
    }
    let report = validate_schedule(sched, clustering.len());
    if !report.valid {
        return Err(Error::arg(format!(
            "schedule violates its period bound: {}",
            report.reason.unwrap_or_default()
        )));
    }
    let mut zoo = AsyncZoo::new(obj, clustering.clone(), cfg.clone(), x0.clone(), seed)?;
    let mut records = Vec::with_capacity(cfg.iterations);
    for &z in &sched.order {
        observe(&zoo, z)?;
        records.push(zoo.step(z)?);
    }
    let final_f = zoo.final_value();
    Ok(RunTrace {
        records,
        final_x: zoo.into_x(),
        final_f,
    })
}

/// One-point estimate of the full gradient from the global observation,
/// `(q / r) h(x + r z, xi) z` with `z` uniform on the unit sphere of `R^q`.
pub fn global_estimate<O: NetworkedObjective + ?Sized>(
    obj: &O,
    x: &BlockVector,
    radius: f64,
    guard: f64,
    noise_rng: &mut StreamRng,
    sphere_rng: &mut StreamRng,
) -> Result<(Vec<f64>, bool)> {
    let noise = obj.sample_noise(noise_rng);
    let q = x.dim();
    let z = sample_unit_sphere(q, sphere_rng)?;
    let mut probe = x.clone();
    for (p, d) in probe.as_mut_slice().iter_mut().zip(&z) {
        *p += radius * d;
    }
    let raw = obj.global_observation(&probe, &noise);
    let guarded = !(raw <= guard);
    let h = if guarded { guard } else { raw };
    Ok((one_point_gradient(h, &z, q, radius)?, guarded))
}

/// Centralized baseline: every step averages `n_avg` global one-point
/// estimates (each with fresh noise and direction) and moves all blocks.
/// Uses `cfg.radii[0]` as the common radius; extrapolation is not applied.
pub fn run_centralized_zoo<O: NetworkedObjective + ?Sized>(
    obj: &O,
    cfg: &ZooConfig,
    x0: &BlockVector,
    n_avg: usize,
    seed: u64,
) -> Result<RunTrace> {
    run_centralized_zoo_with(obj, cfg, x0, n_avg, seed, |_, _| Ok(()))
}

pub fn run_centralized_zoo_with<O, F>(
    obj: &O,
    cfg: &ZooConfig,
    x0: &BlockVector,
    n_avg: usize,
    seed: u64,
    mut observe: F,
) -> Result<RunTrace>
where
    O: NetworkedObjective + ?Sized,
    F: FnMut(&BlockVector, usize) -> Result<()>,
{
    cfg.validate(obj.n_agents())?;
    if n_avg == 0 {
        return Err(Error::arg("need at least one estimate per step"));
    }
    if x0.dims() != obj.block_dims() {
        return Err(Error::arg("initial point does not match the objective's block dims"));
    }
    let r = cfg.radii[0];
    let all: Vec<usize> = (0..obj.n_agents()).collect();
    let mut x = x0.clone();
    let mut records = Vec::with_capacity(cfg.iterations);
    let mut streams = 0u64;
    for k in 0..cfg.iterations {
        observe(&x, k)?;
        let (f_exact, grad_sq_active) = if cfg.record_oracle {
            (
                obj.exact_value(&x),
                obj.exact_gradient(&x).map(|g| norm_sq(g.as_slice())),
            )
        } else {
            (None, None)
        };
        let draw = |j: usize| {
            let mut nr = stream(seed, Purpose::Baseline, (2 * j) as u64, k as u64);
            let mut sr = stream(seed, Purpose::Baseline, (2 * j + 1) as u64, k as u64);
            global_estimate(obj, &x, r, cfg.guard, &mut nr, &mut sr)
        };
        let draws: Vec<(Vec<f64>, bool)> = if cfg.parallel {
            (0..n_avg).into_par_iter().map(draw).collect::<Result<_>>()?
        } else {
            (0..n_avg).map(draw).collect::<Result<_>>()?
        };
        streams += 2 * n_avg as u64;
        let mut mean = vec![0.0; x.dim()];
        let mut guarded = 0;
        for (g, flag) in &draws {
            for (m, v) in mean.iter_mut().zip(g) {
                *m += v;
            }
            guarded += usize::from(*flag);
        }
        mean.iter_mut().for_each(|m| *m /= n_avg as f64);
        for (p, g) in x.as_mut_slice().iter_mut().zip(&mean) {
            *p -= cfg.eta * g;
        }
        records.push(IterationRecord {
            iter: k,
            cluster: 0,
            grad_norms: vec![(all.len(), norm(&mean))],
            f_exact,
            grad_sq_active,
            guarded,
            seed_counter: streams,
        });
    }
    let final_f = if cfg.record_oracle { obj.exact_value(&x) } else { None };
    Ok(RunTrace {
        records,
        final_x: x,
        final_f,
    })
}

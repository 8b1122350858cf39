use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ClusteringChoice, ExperimentConfig, ScenarioKind, ScheduleSpec};
use super::scenario::{build_formation_scenario, chain_lqr_scenario, default_formation_graphs};
use crate::error::{Error, Result};
use crate::lqr::io::{read_gain, read_system, write_gain};
use crate::lqr::{centralized_optimum, global_cost, is_schur_stable, scaled_radius, LqrObjective};
use crate::netgraph::{cluster_non_adjacent, min_cluster_trials, validate_clustering, ClusterMode, Clustering};
use crate::rng::{stream, Purpose};
use crate::zoo::{
    fmt_float, global_estimate, make_cyclic_schedule, make_shuffled_schedule, run_async_zoo_with,
    run_centralized_zoo_with, validate_schedule, BlockVector, NetworkedObjective, PairwiseDisplacement, RunTrace,
    UpdateSchedule, ZooConfig,
};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const BAND_HEADER: &str = "iter,current,min,max,mean,averaged";

#[derive(Debug, Clone)]
pub enum Problem {
    Lqr(LqrObjective),
    Displacement(PairwiseDisplacement),
}

/// A built scenario: objective, starting point and the clustering shared by
/// every seed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub problem: Problem,
    pub x0: BlockVector,
    pub clustering: Clustering,
    /// Centralized optimum of the LQR cost, when it can be computed.
    pub j_star: Option<f64>,
}

impl Scenario {
    pub fn objective(&self) -> &dyn NetworkedObjective {
        match &self.problem {
            Problem::Lqr(o) => o,
            Problem::Displacement(o) => o,
        }
    }
}

fn edges0(edges: &[[usize; 2]], n: usize, what: &str) -> Result<Vec<(usize, usize)>> {
    edges
        .iter()
        .map(|&[a, b]| {
            if a == 0 || b == 0 || a > n || b > n {
                Err(Error::Config(format!("{what} edge ({a}, {b}) out of range 1..={n}")))
            } else {
                Ok((a - 1, b - 1))
            }
        })
        .collect()
}

fn choose_clustering(cfg: &ExperimentConfig, obj: &dyn NetworkedObjective) -> Result<Clustering> {
    let g = obj.graph();
    let mut rng = stream(cfg.output.seed, Purpose::Clustering, 0, 0);
    let c = match cfg.graphs.clustering {
        ClusteringChoice::MinTrials => min_cluster_trials(g, cfg.graphs.trials, &mut rng),
        ClusteringChoice::LowestIndex => cluster_non_adjacent(g, &mut rng, ClusterMode::LowestIndex),
        ClusteringChoice::Random => cluster_non_adjacent(g, &mut rng, ClusterMode::Random),
        ClusteringChoice::Singletons => Clustering::singletons(g.n_vertices()),
        ClusteringChoice::Explicit => {
            let given = cfg.graphs.clusters.as_ref().ok_or_else(|| Error::Config("missing clusters".into()))?;
            let mut clusters = Vec::with_capacity(given.len());
            for cl in given {
                if cl.iter().any(|&v| v == 0 || v > g.n_vertices()) {
                    return Err(Error::Config("cluster member out of range".into()));
                }
                clusters.push(cl.iter().map(|v| v - 1).collect());
            }
            let c = Clustering::new(clusters);
            let report = validate_clustering(g, &c);
            if !report.is_valid() {
                return Err(Error::Config(format!(
                    "explicit clustering is not valid for the learning graph (conflicts {:?})",
                    report.conflicts
                )));
            }
            c
        }
    };
    Ok(c)
}

/// Builds the objective, initial point and clustering described by `cfg`.
pub fn build_scenario(cfg: &ExperimentConfig) -> Result<Scenario> {
    cfg.validate()?;
    let s = &cfg.scenario;
    let n = s.n_agents;
    let has_overrides = cfg.graphs.cost_edges.is_some() || cfg.graphs.sensing_edges.is_some() || cfg.graphs.leaders.is_some();
    let lqr = |(sys, k0): (crate::lqr::MasLqrSystem, crate::lqr::DistributedGain)| -> Result<(Problem, BlockVector, Option<f64>)> {
        if !is_schur_stable(&sys, k0.dense()) {
            return Err(Error::Config(format!(
                "initial gain is not stabilizing (scaled spectral radius {:.6})",
                scaled_radius(&sys, k0.dense())?
            )));
        }
        let j_star = centralized_optimum(&sys).ok().map(|o| o.cost);
        let obj = LqrObjective::new(sys, cfg.lqr.t_j)?;
        if k0.pattern() != obj.pattern() {
            return Err(Error::Config("initial gain does not match the sensing pattern".into()));
        }
        Ok((Problem::Lqr(obj), k0.to_vector(), j_star))
    };
    let (problem, x0, j_star) = match s.name {
        ScenarioKind::Formation => {
            let (dc, ds, dl) = default_formation_graphs(n);
            let cost = match &cfg.graphs.cost_edges {
                Some(e) => edges0(e, n, "cost")?,
                None => dc,
            };
            let sensing = match &cfg.graphs.sensing_edges {
                Some(e) => edges0(e, n, "sensing")?,
                None => ds,
            };
            let leaders = match &cfg.graphs.leaders {
                Some(l) if l.iter().any(|&v| v == 0 || v > n) => {
                    return Err(Error::Config("leader id out of range".into()))
                }
                Some(l) => l.iter().map(|v| v - 1).collect(),
                None => dl,
            };
            lqr(build_formation_scenario(n, &cost, &sensing, &leaders, s.gamma)?)?
        }
        ScenarioKind::ChainLqr | ScenarioKind::SystemFile | ScenarioKind::DisplacementChain if has_overrides => {
            return Err(Error::Config("graph overrides are only supported by the formation scenario".into()));
        }
        ScenarioKind::ChainLqr => lqr(chain_lqr_scenario(n, s.gamma)?)?,
        ScenarioKind::SystemFile => {
            let sys = read_system(s.system_file.as_deref().unwrap_or(Path::new("")))?;
            let k0 = read_gain(s.initial_gain_file.as_deref().unwrap_or(Path::new("")))?;
            lqr((sys, k0))?
        }
        ScenarioKind::DisplacementChain => {
            let obj = PairwiseDisplacement::chain(n, s.noise_std).map_err(|e| Error::Config(e.to_string()))?;
            let x0 = BlockVector::zeros(&obj.block_dims())?;
            (Problem::Displacement(obj), x0, None)
        }
    };
    let mut scenario = Scenario {
        problem,
        x0,
        clustering: Clustering::single(1),
        j_star,
    };
    scenario.clustering = choose_clustering(cfg, scenario.objective())?;
    Ok(scenario)
}

/// Update order for one seed; rejected if it violates its period bound.
pub fn build_schedule(cfg: &ExperimentConfig, s: usize, seed: u64) -> Result<UpdateSchedule> {
    let t = cfg.lqr.t_k;
    let sched = match &cfg.zoo.schedule {
        ScheduleSpec::Cyclic => make_cyclic_schedule(s, t),
        ScheduleSpec::Shuffled => make_shuffled_schedule(s, t, &mut stream(seed, Purpose::Clustering, 1, 0)),
        ScheduleSpec::Explicit { order, period } => UpdateSchedule {
            order: order.iter().cycle().take(t).map(|z| z - 1).collect(),
            period: *period,
        },
    };
    let report = validate_schedule(&sched, s);
    if !report.valid {
        return Err(Error::Config(format!(
            "schedule rejected: {}",
            report.reason.unwrap_or_default()
        )));
    }
    Ok(sched)
}

pub fn zoo_config(cfg: &ExperimentConfig, n_agents: usize) -> Result<ZooConfig> {
    let mut z = ZooConfig::uniform(n_agents, cfg.zoo.eta, cfg.zoo.radius, cfg.lqr.t_k);
    z.radii = cfg.radii(n_agents)?;
    z.w_base = cfg.zoo.w_base;
    z.guard = cfg.zoo.guard;
    z.parallel = cfg.zoo.parallel;
    Ok(z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Distributed,
    Baseline,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Distributed => "distributed",
            Algorithm::Baseline => "baseline",
        }
    }
}

/// Spread of one-step lookahead costs at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub iter: usize,
    /// Cost at the current iterate.
    pub current: f64,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Cost after a step with the average of the side estimates.
    pub averaged: f64,
}

impl BandRow {
    pub fn spread(&self) -> f64 {
        self.max - self.min
    }

    fn from_values(iter: usize, current: f64, values: &[f64], averaged: f64) -> Self {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        Self {
            iter,
            current,
            min,
            max,
            mean,
            averaged,
        }
    }
}

pub fn bands_to_csv(rows: &[BandRow]) -> String {
    let mut s = String::from(BAND_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter,
            fmt_float(r.current),
            fmt_float(r.min),
            fmt_float(r.max),
            fmt_float(r.mean),
            fmt_float(r.averaged)
        );
    }
    s
}

fn exact(obj: &dyn NetworkedObjective, x: &BlockVector) -> Result<f64> {
    obj.exact_value(x)
        .ok_or_else(|| Error::arg("spread bands need an objective with an exact value oracle"))
}

/// Outcome of one algorithm on one seed.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub trace: RunTrace,
    pub bands: Vec<BandRow>,
}

/// Runs the distributed method for one seed, measuring lookahead bands every
/// `repeat_every` steps when `repeats > 0`.
pub fn run_distributed(cfg: &ExperimentConfig, sc: &Scenario, seed: u64) -> Result<SeedRun> {
    let obj = sc.objective();
    let sched = build_schedule(cfg, sc.clustering.len(), seed)?;
    let zcfg = zoo_config(cfg, obj.n_agents())?;
    let (repeats, every) = (cfg.lqr.repeats, cfg.lqr.repeat_every.max(1));
    let mut bands = Vec::new();
    let trace = run_async_zoo_with(obj, &sc.clustering, &sched, &zcfg, &sc.x0, seed, |zoo, z| {
        let k = zoo.iteration();
        if repeats == 0 || k % every != 0 {
            return Ok(());
        }
        let x = zoo.x();
        let mut values = Vec::with_capacity(repeats);
        let mut avg: Option<Vec<Vec<f64>>> = None;
        let mut agents = Vec::new();
        for j in 0..repeats {
            let ups = zoo.propose_repeat(z, j as u64)?;
            let mut y = x.clone();
            for up in &ups {
                y.set_block(up.agent, &up.new_block)?;
            }
            values.push(exact(obj, &y)?);
            match &mut avg {
                None => {
                    agents = ups.iter().map(|u| u.agent).collect();
                    avg = Some(ups.iter().map(|u| u.new_block.clone()).collect());
                }
                Some(acc) => {
                    for (a, up) in acc.iter_mut().zip(&ups) {
                        a.iter_mut().zip(&up.new_block).for_each(|(s, v)| *s += v);
                    }
                }
            }
        }
        let mut y = x.clone();
        for (agent, sum) in agents.iter().zip(avg.unwrap_or_default()) {
            let mean: Vec<f64> = sum.iter().map(|s| s / repeats as f64).collect();
            y.set_block(*agent, &mean)?;
        }
        bands.push(BandRow::from_values(k, exact(obj, x)?, &values, exact(obj, &y)?));
        Ok(())
    })?;
    Ok(SeedRun { trace, bands })
}

/// Runs the centralized baseline for one seed, with the same band protocol
/// (each side draw is one global estimate).
pub fn run_baseline(cfg: &ExperimentConfig, sc: &Scenario, seed: u64) -> Result<SeedRun> {
    let obj = sc.objective();
    let zcfg = zoo_config(cfg, obj.n_agents())?;
    let (repeats, every) = (cfg.lqr.repeats, cfg.lqr.repeat_every.max(1));
    let (r, guard, eta) = (zcfg.radii[0], zcfg.guard, zcfg.eta);
    let mut bands = Vec::new();
    let trace = run_centralized_zoo_with(obj, &zcfg, &sc.x0, cfg.lqr.n_avg, seed, |x, k| {
        if repeats == 0 || k % every != 0 {
            return Ok(());
        }
        let mut values = Vec::with_capacity(repeats);
        let mut sum = vec![0.0; x.dim()];
        for j in 0..repeats as u64 {
            let mut nr = stream(seed, Purpose::Repeat, 2 * j, k as u64);
            let mut sr = stream(seed, Purpose::Repeat, 2 * j + 1, k as u64);
            let (g, _) = global_estimate(obj, x, r, guard, &mut nr, &mut sr)?;
            let mut y = x.clone();
            for ((p, gi), s) in y.as_mut_slice().iter_mut().zip(&g).zip(sum.iter_mut()) {
                *p -= eta * gi;
                *s += gi;
            }
            values.push(exact(obj, &y)?);
        }
        let mut y = x.clone();
        for (p, s) in y.as_mut_slice().iter_mut().zip(&sum) {
            *p -= eta * s / repeats as f64;
        }
        bands.push(BandRow::from_values(k, exact(obj, x)?, &values, exact(obj, &y)?));
        Ok(())
    })?;
    Ok(SeedRun { trace, bands })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub seed: u64,
    pub algorithm: Algorithm,
    /// Trace path relative to the artifact directory.
    pub trace: Option<String>,
    pub bands: Option<String>,
    pub final_cost: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<u64>,
    /// 1-based clustering used by every seed.
    pub clustering: Vec<Vec<usize>>,
    pub initial_cost: Option<f64>,
    pub j_star: Option<f64>,
    pub runs: Vec<RunEntry>,
    /// Aggregate cost bands per algorithm, relative paths.
    pub aggregates: Vec<String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: e.line(),
            msg: e.to_string(),
        })
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn mkdir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Median, min and max of the exact cost per iteration over seeds.
pub fn aggregate_csv(curves: &[Vec<f64>]) -> String {
    let mut s = String::from("iter,median,min,max,n\n");
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    for k in 0..len {
        let mut v: Vec<f64> = curves.iter().map(|c| c[k]).collect();
        v.sort_by(f64::total_cmp);
        let m = v.len();
        let median = if m % 2 == 1 { v[m / 2] } else { 0.5 * (v[m / 2 - 1] + v[m / 2]) };
        let _ = writeln!(s, "{k},{},{},{},{m}", fmt_float(median), fmt_float(v[0]), fmt_float(v[m - 1]));
    }
    s
}

fn run_one(
    cfg: &ExperimentConfig,
    sc: &Scenario,
    dir: &Path,
    seed: u64,
    alg: Algorithm,
) -> (RunEntry, Option<Vec<f64>>) {
    let mut entry = RunEntry {
        seed,
        algorithm: alg,
        trace: None,
        bands: None,
        final_cost: None,
        error: None,
    };
    let result = (|| -> Result<Option<Vec<f64>>> {
        let run = match alg {
            Algorithm::Distributed => run_distributed(cfg, sc, seed)?,
            Algorithm::Baseline => run_baseline(cfg, sc, seed)?,
        };
        let sub = PathBuf::from(format!("seed-{seed}"));
        mkdir(&dir.join(&sub))?;
        let trace_rel = sub.join(format!("{}.csv", alg.name()));
        run.trace.write_csv(&dir.join(&trace_rel))?;
        entry.trace = Some(trace_rel.display().to_string());
        if !run.bands.is_empty() {
            let rel = sub.join(format!("bands_{}.csv", alg.name()));
            write(&dir.join(&rel), &bands_to_csv(&run.bands))?;
            entry.bands = Some(rel.display().to_string());
        }
        if let Problem::Lqr(obj) = &sc.problem {
            let k = crate::lqr::DistributedGain::from_vector(obj.pattern().clone(), &run.trace.final_x)?;
            write_gain(&dir.join(sub.join(format!("gain_{}.json", alg.name()))), &k)?;
        }
        entry.final_cost = run.trace.final_f;
        Ok(run.trace.cost_curve())
    })();
    match result {
        Ok(curve) => (entry, curve),
        Err(e) => {
            entry.error = Some(e.to_string());
            (entry, None)
        }
    }
}

/// Runs every configured algorithm for every seed and writes the artifact
/// directory `cfg.output.dir`. A failing seed is recorded in the manifest and
/// the remaining seeds still run.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    let sc = build_scenario(cfg)?;
    let seeds = cfg.seeds();
    // reject bad schedules before any compute
    build_schedule(cfg, sc.clustering.len(), seeds[0])?;
    let dir = cfg.output.dir.clone();
    mkdir(&dir)?;

    let mut algs = Vec::new();
    if cfg.lqr.distributed {
        algs.push(Algorithm::Distributed);
    }
    if cfg.lqr.baseline {
        algs.push(Algorithm::Baseline);
    }
    let jobs: Vec<(u64, Algorithm)> = seeds.iter().flat_map(|&s| algs.iter().map(move |&a| (s, a))).collect();
    let results: Vec<(RunEntry, Option<Vec<f64>>)> = jobs
        .par_iter()
        .map(|&(seed, alg)| run_one(cfg, &sc, &dir, seed, alg))
        .collect();

    let mut aggregates = Vec::new();
    for &alg in &algs {
        let curves: Vec<Vec<f64>> = results
            .iter()
            .filter(|(e, _)| e.algorithm == alg)
            .filter_map(|(_, c)| c.clone())
            .collect();
        if curves.is_empty() {
            continue;
        }
        let rel = format!("aggregate_{}.csv", alg.name());
        write(&dir.join(&rel), &aggregate_csv(&curves))?;
        aggregates.push(rel);
    }

    let initial_cost = match &sc.problem {
        Problem::Lqr(obj) => obj.gain(&sc.x0).ok().and_then(|k| global_cost(obj.system(), &k).ok()),
        Problem::Displacement(obj) => obj.exact_value(&sc.x0),
    };
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: ExperimentConfig {
            output: crate::harness::config::OutputSection {
                seeds: Some(seeds.clone()),
                ..cfg.output.clone()
            },
            ..cfg.clone()
        },
        seeds,
        clustering: sc.clustering.one_based(),
        initial_cost,
        j_star: sc.j_star,
        runs: results.into_iter().map(|(e, _)| e).collect(),
        aggregates,
    };
    write(&dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

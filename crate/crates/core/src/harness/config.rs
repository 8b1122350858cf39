use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    /// Leader-follower double-integrator formation.
    Formation,
    /// Scalar agents on a path with a leader-to-follower sensing chain.
    ChainLqr,
    /// Multi-agent LQR loaded from a system file and a gain checkpoint.
    SystemFile,
    /// Scalar pairwise-displacement objective on a path (no LQR).
    DisplacementChain,
}

impl ScenarioKind {
    pub fn is_lqr(self) -> bool {
        !matches!(self, ScenarioKind::DisplacementChain)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: ScenarioKind,
    pub n_agents: usize,
    pub gamma: f64,
    pub system_file: Option<PathBuf>,
    pub initial_gain_file: Option<PathBuf>,
    /// Edge noise of the displacement objective.
    pub noise_std: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: ScenarioKind::Formation,
            n_agents: 10,
            gamma: 0.99,
            system_file: None,
            initial_gain_file: None,
            noise_std: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClusteringChoice {
    /// Fewest clusters over randomized greedy trials.
    MinTrials,
    LowestIndex,
    Random,
    /// One agent per cluster (plain block coordinate descent).
    Singletons,
    /// Use `graphs.clusters`.
    Explicit,
}

/// Graph overrides; agent ids are 1-based. Missing edge lists fall back to
/// the scenario defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphsConfig {
    pub cost_edges: Option<Vec<[usize; 2]>>,
    pub sensing_edges: Option<Vec<[usize; 2]>>,
    pub leaders: Option<Vec<usize>>,
    pub clustering: ClusteringChoice,
    pub trials: usize,
    pub clusters: Option<Vec<Vec<usize>>>,
}

impl Default for GraphsConfig {
    fn default() -> Self {
        Self {
            cost_edges: None,
            sensing_edges: None,
            leaders: None,
            clustering: ClusteringChoice::MinTrials,
            trials: 100,
            clusters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ScheduleSpec {
    Cyclic,
    /// Random permutation of the clusters in each epoch.
    Shuffled,
    /// Explicit 1-based cluster order, repeated to fill the run, with its
    /// declared period bound.
    Explicit { order: Vec<usize>, period: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZooSection {
    pub eta: f64,
    pub radius: f64,
    /// Per-agent radii; overrides `radius`.
    pub radii: Option<Vec<f64>>,
    pub w_base: f64,
    pub schedule: ScheduleSpec,
    pub guard: f64,
    pub parallel: bool,
}

impl Default for ZooSection {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            radius: 1.0,
            radii: None,
            w_base: 0.0,
            schedule: ScheduleSpec::Cyclic,
            guard: 5e3,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LqrSection {
    /// Learning iterations (also used by the displacement scenario).
    pub t_k: usize,
    /// Rollout horizon.
    pub t_j: usize,
    pub distributed: bool,
    pub baseline: bool,
    /// Estimates averaged per baseline step.
    pub n_avg: usize,
    /// Side draws per measured iteration for the spread bands; 0 disables.
    pub repeats: usize,
    /// Measure every this many iterations.
    pub repeat_every: usize,
}

impl Default for LqrSection {
    fn default() -> Self {
        Self {
            t_k: 1000,
            t_j: 50,
            distributed: true,
            baseline: false,
            n_avg: 50,
            repeats: 0,
            repeat_every: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub n_seeds: usize,
    /// First seed; seeds are `seed, seed + 1, ...` unless listed.
    pub seed: u64,
    pub seeds: Option<Vec<u64>>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs/latest"),
            n_seeds: 1,
            seed: 0,
            seeds: None,
        }
    }
}

/// Experiment description. The default is the 10-robot formation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: ScenarioConfig,
    pub graphs: GraphsConfig,
    pub zoo: ZooSection,
    pub lqr: LqrSection,
    pub output: OutputSection,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    /// Named presets: `formation` (10 robots), `formation-100` (100 robots),
    /// `chain-lqr` (3-agent desk instance), `displacement` (4-agent chain).
    pub fn preset(name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        match name {
            "formation" | "paper" => {}
            "formation-100" | "paper-100" => cfg.scenario.n_agents = 100,
            "chain-lqr" => {
                cfg.scenario.name = ScenarioKind::ChainLqr;
                cfg.scenario.n_agents = 3;
                cfg.scenario.gamma = 0.9;
                cfg.zoo.eta = 1e-5;
                cfg.zoo.radius = 0.5;
                cfg.zoo.guard = 1e3;
                cfg.lqr.t_k = 20_000;
                cfg.lqr.t_j = 60;
            }
            "displacement" => {
                cfg.scenario.name = ScenarioKind::DisplacementChain;
                cfg.scenario.n_agents = 4;
                cfg.zoo.eta = 1e-3;
                cfg.zoo.radius = 0.1;
                cfg.zoo.guard = crate::zoo::DEFAULT_GUARD;
                cfg.lqr.t_k = 10_000;
            }
            other => return Err(Error::Config(format!("unknown preset `{other}`"))),
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config JSON: {e}")))?;
        // a manifest embeds the config it was produced from
        let value = match value.get("config") {
            Some(inner) if value.get("seeds").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.output.seeds {
            Some(s) => s.clone(),
            None => (0..self.output.n_seeds as u64).map(|j| self.output.seed + j).collect(),
        }
    }

    pub fn radii(&self, n_agents: usize) -> Result<Vec<f64>> {
        match &self.zoo.radii {
            Some(r) if r.len() != n_agents => Err(Error::Config(format!(
                "{} radii given for {n_agents} agents",
                r.len()
            ))),
            Some(r) => Ok(r.clone()),
            None => Ok(vec![self.zoo.radius; n_agents]),
        }
    }

    /// Checks everything that does not need the scenario to be built.
    pub fn validate(&self) -> Result<()> {
        let s = &self.scenario;
        if s.n_agents == 0 {
            return Err(Error::Config("n_agents must be positive".into()));
        }
        if !(s.gamma > 0.0 && s.gamma <= 1.0) {
            return Err(Error::Config(format!("gamma must lie in (0, 1], got {}", s.gamma)));
        }
        if s.name == ScenarioKind::SystemFile {
            for (what, p) in [("system_file", &s.system_file), ("initial_gain_file", &s.initial_gain_file)] {
                match p {
                    None => return Err(Error::Config(format!("scenario needs `{what}`"))),
                    Some(p) if !p.exists() => {
                        return Err(Error::Config(format!("{what} `{}` does not exist", p.display())))
                    }
                    _ => {}
                }
            }
        }
        if s.noise_std < 0.0 {
            return Err(Error::Config("noise_std must be nonnegative".into()));
        }
        positive("zoo.eta", self.zoo.eta)?;
        positive("zoo.guard", self.zoo.guard)?;
        match &self.zoo.radii {
            Some(r) => r.iter().try_for_each(|&v| positive("zoo.radii", v))?,
            None => positive("zoo.radius", self.zoo.radius)?,
        }
        if !(0.0..1.0).contains(&self.zoo.w_base) {
            return Err(Error::Config(format!("zoo.w_base must lie in [0, 1), got {}", self.zoo.w_base)));
        }
        let l = &self.lqr;
        if l.t_k == 0 || l.t_j == 0 {
            return Err(Error::Config("t_k and t_j must be positive".into()));
        }
        if !l.distributed && !l.baseline {
            return Err(Error::Config("enable the distributed run, the baseline, or both".into()));
        }
        if l.baseline && l.n_avg == 0 {
            return Err(Error::Config("n_avg must be positive".into()));
        }
        if l.repeats > 0 && l.repeat_every == 0 {
            return Err(Error::Config("repeat_every must be positive".into()));
        }
        if l.baseline && !s.name.is_lqr() {
            return Err(Error::Config("the baseline is only available for LQR scenarios".into()));
        }
        if self.seeds().is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.graphs.clustering == ClusteringChoice::Explicit && self.graphs.clusters.is_none() {
            return Err(Error::Config("explicit clustering needs `graphs.clusters`".into()));
        }
        if let ScheduleSpec::Explicit { order, period } = &self.zoo.schedule {
            if order.is_empty() || order.contains(&0) {
                return Err(Error::Config("explicit schedule must be a nonempty list of 1-based cluster ids".into()));
            }
            if *period == 0 {
                return Err(Error::Config("explicit schedule period must be positive".into()));
            }
        }
        Ok(())
    }
}

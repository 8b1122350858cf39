use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::experiment::{Algorithm, Manifest};
use crate::error::{Error, Result};
use crate::zoo::parse_trace_csv;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub algorithm: Algorithm,
    pub iterations: usize,
    pub initial_cost: Option<f64>,
    pub final_cost: Option<f64>,
    pub best_cost: Option<f64>,
    /// `final / J*`.
    pub final_over_floor: Option<f64>,
    pub guarded: usize,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub scenario: String,
    pub clustering: Vec<Vec<usize>>,
    pub j_star: Option<f64>,
    pub runs: Vec<RunSummary>,
}

impl ExperimentSummary {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "scenario: {}", self.scenario);
        let cl: Vec<String> = self
            .clustering
            .iter()
            .map(|c| format!("{{{}}}", c.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")))
            .collect();
        let _ = writeln!(s, "clustering ({}): {}", self.clustering.len(), cl.join(" "));
        match self.j_star {
            Some(j) => {
                let _ = writeln!(s, "centralized optimum J*: {j:.6}");
            }
            None => s.push_str("centralized optimum J*: n/a\n"),
        }
        let opt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.6}"));
        for r in &self.runs {
            if let Some(e) = &r.error {
                let _ = writeln!(s, "seed {} {}: FAILED: {e}", r.seed, r.algorithm.name());
                continue;
            }
            let _ = writeln!(
                s,
                "seed {} {}: iterations {} initial {} final {} best {} final/J* {} guarded {}",
                r.seed,
                r.algorithm.name(),
                r.iterations,
                opt(r.initial_cost),
                opt(r.final_cost),
                opt(r.best_cost),
                opt(r.final_over_floor),
                r.guarded
            );
        }
        s
    }
}

/// Summarizes an artifact directory written by `run_experiment`.
pub fn report_summary(dir: &Path) -> Result<ExperimentSummary> {
    let manifest = Manifest::read(dir)?;
    let mut runs = Vec::with_capacity(manifest.runs.len());
    for e in &manifest.runs {
        let mut r = RunSummary {
            seed: e.seed,
            algorithm: e.algorithm,
            iterations: 0,
            initial_cost: None,
            final_cost: e.final_cost,
            best_cost: None,
            final_over_floor: None,
            guarded: 0,
            error: e.error.clone(),
        };
        if let Some(rel) = &e.trace {
            let path = dir.join(rel);
            let text = std::fs::read_to_string(&path).map_err(|err| Error::io(&path, err))?;
            let rows = parse_trace_csv(&text, &path.display().to_string())?;
            r.iterations = rows.len();
            r.initial_cost = rows.first().and_then(|row| row.f_exact);
            r.guarded = rows.iter().map(|row| row.guarded).sum();
            r.best_cost = rows
                .iter()
                .filter_map(|row| row.f_exact)
                .chain(e.final_cost)
                .reduce(f64::min);
            r.final_over_floor = match (e.final_cost, manifest.j_star) {
                (Some(f), Some(j)) if j > 0.0 => Some(f / j),
                _ => None,
            };
        }
        runs.push(r);
    }
    let scenario = serde_json::to_value(manifest.config.scenario.name)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    Ok(ExperimentSummary {
        scenario,
        clustering: manifest.clustering,
        j_star: manifest.j_star,
        runs,
    })
}

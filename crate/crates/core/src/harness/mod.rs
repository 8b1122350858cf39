//! Scenario builders, experiment orchestration and artifact summaries.
//!
//! An artifact directory holds `manifest.json`, one `seed-<s>/` directory per
//! seed with `<algorithm>.csv` traces, optional `bands_<algorithm>.csv`
//! lookahead spreads (`iter,current,min,max,mean,averaged`) and final gain
//! checkpoints, plus `aggregate_<algorithm>.csv` (`iter,median,min,max,n`).

mod config;
mod experiment;
mod report;
mod scenario;

pub use config::{
    ClusteringChoice, ExperimentConfig, GraphsConfig, LqrSection, OutputSection, ScenarioConfig, ScenarioKind,
    ScheduleSpec, ZooSection,
};
pub use experiment::{
    aggregate_csv, bands_to_csv, build_scenario, build_schedule, run_baseline, run_distributed, run_experiment,
    zoo_config, Algorithm, BandRow, Manifest, Problem, RunEntry, Scenario, SeedRun, BAND_HEADER, MANIFEST_FILE,
};
pub use report::{report_summary, ExperimentSummary, RunSummary};
pub use scenario::{build_formation_scenario, chain_lqr_scenario, default_formation, default_formation_graphs};

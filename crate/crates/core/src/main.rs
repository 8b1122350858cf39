use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use blockzoo::diagnostics::{
    bias_audit, covariance_gap, global_estimate_block, local_estimate, mc_covariance, predicted_gap_leading,
    render_text,
};
use blockzoo::harness::{build_scenario, report_summary, run_experiment, ExperimentConfig, Problem};
use blockzoo::lqr::io::{read_gain, write_gain};
use blockzoo::lqr::{centralized_optimum, global_cost, scaled_radius, DistributedGain};
use blockzoo::netgraph::{cluster_non_adjacent, io::read_graph, min_cluster_trials, validate_clustering, ClusterMode};
use blockzoo::rng::{stream, Purpose};
use blockzoo::zoo::{
    advise_parameters, sample_unit_sphere, AdvisorInput, BlockVector, NetworkedObjective, PairwiseDisplacement,
};
use blockzoo::Error;

#[derive(Parser)]
#[command(name = "blockzoo", version, about = "Distributed zeroth-order block coordinate descent and multi-agent LQR learning")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON experiment config (or a manifest from a previous run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Randomized clustering trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a graph file into non-adjacent groups.
    Cluster {
        graph: PathBuf,
        #[arg(long, value_enum, default_value = "min-trials")]
        mode: ModeArg,
    },
    /// Generic zeroth-order learning on a built-in objective.
    Learn(RunArgs),
    /// Asynchronous distributed LQR learning.
    Lqr(RunArgs),
    /// Centralized one-point baseline.
    Baseline(RunArgs),
    /// Estimator diagnostics on the scalar displacement chain.
    Variance {
        #[arg(long, default_value_t = 4)]
        agents: usize,
        #[arg(long, default_value_t = 0.1)]
        radius: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0.1)]
        noise_std: f64,
    },
    /// Parameter advice from a JSON file of problem constants.
    Advise { input: PathBuf },
    /// Exact cost, gradient and centralized optimum of an LQR scenario.
    Oracle {
        /// Gain checkpoint to evaluate instead of the scenario's initial gain.
        #[arg(long)]
        gain: Option<PathBuf>,
    },
    /// Summarize an artifact directory.
    Report { dir: Option<PathBuf> },
}

#[derive(Args)]
struct RunArgs {
    /// Named preset used when no config file is given.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Also run the centralized baseline (for `lqr`).
    #[arg(long)]
    with_baseline: bool,
    /// Side draws per measured iteration for spread bands.
    #[arg(long)]
    repeats: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    MinTrials,
    LowestIndex,
    Random,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(
            Error::NotStabilizing { .. } | Error::NoConvergence { .. } | Error::RunsFailed { .. } | Error::Internal(_),
        ) => 3,
        _ => 2,
    }
}

fn load_config(g: &Global, default_preset: &str, preset: Option<&str>) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &g.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::preset(preset.unwrap_or(default_preset))?,
    };
    if let Some(s) = g.seed {
        cfg.output.seed = s;
        cfg.output.seeds = None;
    }
    if let Some(o) = &g.out {
        cfg.output.dir = o.clone();
    }
    if let Some(t) = g.trials {
        cfg.graphs.trials = t;
    }
    Ok(cfg)
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(v)?).with_context(|| format!("writing {}", path.display()))
}

fn run(g: &Global, args: &RunArgs, default_preset: &str, distributed: bool, baseline: bool) -> anyhow::Result<()> {
    let mut cfg = load_config(g, default_preset, args.preset.as_deref())?;
    if let Some(n) = args.seeds {
        cfg.output.n_seeds = n;
        cfg.output.seeds = None;
    }
    if let Some(t) = args.iterations {
        cfg.lqr.t_k = t;
    }
    if let Some(r) = args.repeats {
        cfg.lqr.repeats = r;
    }
    cfg.lqr.distributed = distributed;
    cfg.lqr.baseline |= baseline || args.with_baseline;
    let manifest = run_experiment(&cfg)?;
    let summary = report_summary(&cfg.output.dir)?;
    print!("{}", summary.to_text());
    let failed = manifest.runs.iter().filter(|r| r.error.is_some()).count();
    println!("artifacts: {}", cfg.output.dir.display());
    if failed > 0 {
        anyhow::bail!(Error::RunsFailed {
            failed,
            total: manifest.runs.len(),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterOutput {
    clusters: Vec<Vec<usize>>,
    count: usize,
    valid: bool,
}

#[derive(Serialize)]
struct OracleOutput {
    cost: f64,
    scaled_spectral_radius: f64,
    projected_gradient_norm: f64,
    optimum_cost: f64,
    optimum_iterations: usize,
    ratio_to_optimum: f64,
}

#[derive(Serialize)]
struct VarianceOutput {
    gap: blockzoo::diagnostics::GapReport,
    bias: Vec<blockzoo::diagnostics::BiasAudit>,
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Cluster { graph, mode } => {
            let graph = read_graph(graph)?;
            let mut rng = stream(g.seed.unwrap_or(0), Purpose::Clustering, 0, 0);
            let c = match mode {
                ModeArg::MinTrials => min_cluster_trials(&graph, g.trials.unwrap_or(100), &mut rng),
                ModeArg::LowestIndex => cluster_non_adjacent(&graph, &mut rng, ClusterMode::LowestIndex),
                ModeArg::Random => cluster_non_adjacent(&graph, &mut rng, ClusterMode::Random),
            };
            let out = ClusterOutput {
                clusters: c.one_based(),
                count: c.len(),
                valid: validate_clustering(&graph, &c).is_valid(),
            };
            print_json(&out)?;
            if let Some(dir) = &g.out {
                write_json(&dir.join("clustering.json"), &out)?;
            }
        }
        Command::Learn(a) => run(g, a, "displacement", true, false)?,
        Command::Lqr(a) => run(g, a, "formation", true, false)?,
        Command::Baseline(a) => run(g, a, "formation", false, true)?,
        Command::Variance {
            agents,
            radius,
            samples,
            noise_std,
        } => {
            let obj = PairwiseDisplacement::chain(*agents, *noise_std)?;
            let x = BlockVector::zeros(&obj.block_dims())?;
            let seed = g.seed.unwrap_or(0);
            let local = mc_covariance(|_, rng| local_estimate(&obj, &x, 0, *radius, rng), *samples, seed, 0)?;
            let global = mc_covariance(|_, rng| global_estimate_block(&obj, &x, 0, *radius, rng), *samples, seed, 1)?;
            let h_sq = mc_covariance(
                |_, rng| {
                    let noise = obj.sample_noise(rng);
                    let z = sample_unit_sphere(x.dim(), rng).expect("positive dimension");
                    let mut probe = x.clone();
                    probe.as_mut_slice().iter_mut().zip(&z).for_each(|(p, d)| *p += radius * d);
                    let h = obj.global_observation(&probe, &noise);
                    vec![h * h]
                },
                *samples,
                seed,
                2,
            )?;
            let mean_h_sq = h_sq.mean[0];
            let predicted = predicted_gap_leading(1, obj.n_agents() - 1, mean_h_sq, *radius);
            let gap = covariance_gap(&local, &global, predicted)?;
            let phi = obj.smoothness();
            let bias = (0..obj.n_agents())
                .map(|i| bias_audit(&obj, &x, i, *radius, phi, *samples, seed))
                .collect::<blockzoo::Result<Vec<_>>>()?;
            let out = VarianceOutput { gap, bias };
            print!("{}", render_text("estimator diagnostics", &out)?);
            if let Some(dir) = &g.out {
                write_json(&dir.join("variance.json"), &out)?;
            }
        }
        Command::Advise { input } => {
            let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let inp: AdvisorInput =
                serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", input.display())))?;
            let out = advise_parameters(&inp)?;
            print_json(&out)?;
            if let Some(dir) = &g.out {
                write_json(&dir.join("advice.json"), &out)?;
            }
        }
        Command::Oracle { gain } => {
            let cfg = load_config(g, "formation", None)?;
            let sc = build_scenario(&cfg)?;
            let Problem::Lqr(obj) = &sc.problem else {
                anyhow::bail!(Error::Config("the oracle needs an LQR scenario".into()));
            };
            let k = match gain {
                Some(p) => read_gain(p)?,
                None => DistributedGain::from_vector(obj.pattern().clone(), &sc.x0)?,
            };
            let sys = obj.system();
            let opt = centralized_optimum(sys)?;
            let cost = global_cost(sys, k.dense())?;
            let out = OracleOutput {
                cost,
                scaled_spectral_radius: scaled_radius(sys, k.dense())?,
                projected_gradient_norm: obj.projected_gradient(k.dense())?.norm(),
                optimum_cost: opt.cost,
                optimum_iterations: opt.iterations,
                ratio_to_optimum: cost / opt.cost,
            };
            print_json(&out)?;
            if let Some(dir) = &g.out {
                write_json(&dir.join("oracle.json"), &out)?;
                write_gain(&dir.join("gain.json"), &k)?;
            }
        }
        Command::Report { dir } => {
            let dir = dir
                .clone()
                .or_else(|| g.out.clone())
                .ok_or_else(|| Error::Config("give the artifact directory".into()))?;
            let summary = report_summary(&dir)?;
            print!("{}", summary.to_text());
            write_json(&dir.join("summary.json"), &summary)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("BLOCKZOO_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure if a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = String::new();
            for cause in e.chain() {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    if !msg.is_empty() {
                        msg.push_str(": ");
                    }
                    msg.push_str(&c);
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}

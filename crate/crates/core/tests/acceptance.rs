//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits with a
//! failure status if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use blockzoo::diagnostics::{
    bias_audit, covariance_gap, global_estimate_block, local_estimate, mc_covariance, predicted_gap_leading,
};
use blockzoo::harness::{
    build_scenario, default_formation, run_baseline, run_distributed, run_experiment, ExperimentConfig, Problem,
};
use blockzoo::lqr::{
    centralized_optimum, global_cost, required_horizon, rollout_local_cost, DistributedGain, InitialState,
    LqrObjective, MasLqrSystem,
};
use blockzoo::netgraph::{
    build_learning_graph, min_cluster_trials, reachable_set, validate_clustering, Clustering, DirectedGraph,
};
use blockzoo::rng::{stream, Purpose};
use blockzoo::zoo::{
    advise_parameters, make_cyclic_schedule, one_point_gradient, run_async_zoo, sample_unit_sphere, AdvisorInput,
    AdvisorVariant, BlockVector, NetworkedObjective, PairwiseDisplacement, Quadratic, ZooConfig,
};
use common::{chain3, closed_loop_norm, contractive_gains, random_stable_gains, rel_err};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fd_gradient(k: &DistributedGain, only: Option<usize>, f: impl Fn(&DMatrix<f64>) -> f64) -> Vec<f64> {
    const H: f64 = 1e-5;
    let x = k.to_vector();
    let mut out = Vec::new();
    for i in (0..x.n_blocks()).filter(|&i| only.is_none_or(|b| b == i)) {
        for e in 0..x.block_dim(i) {
            let eval = |d: f64| {
                let mut y = x.clone();
                y.block_mut(i)[e] += d;
                f(DistributedGain::from_vector(k.pattern().clone(), &y).unwrap().dense())
            };
            out.push((eval(H) - eval(-H)) / (2.0 * H));
        }
    }
    out
}

fn c1_clustering() -> Outcome {
    let chain = DirectedGraph::undirected_chain(4, true).unwrap();
    let target = Clustering::new(vec![vec![0, 2], vec![1, 3]]).canonical();
    let mut hit = false;
    for seed in 0..100u64 {
        let c = min_cluster_trials(&chain, 50, &mut stream(seed, Purpose::Clustering, 0, 0));
        check(validate_clustering(&chain, &c).is_valid() && c.len() == 2, format!("seed {seed}: {c:?}"))?;
        hit |= c.canonical() == target;
    }
    check(hit, "{{1,3},{2,4}} never returned")?;

    let (sys, _) = default_formation(10, 0.99).unwrap();
    let learning = LqrObjective::new(sys, 1).unwrap().learning_graph().clone();
    let found = min_cluster_trials(&learning, 100, &mut stream(0, Purpose::Clustering, 0, 0));
    check(
        found.len() == 3 && validate_clustering(&learning, &found).is_valid(),
        format!("formation clustering {:?}", found.one_based()),
    )?;
    let named = Clustering::new(vec![vec![0, 3, 5, 7], vec![1, 4, 8], vec![2, 6, 9]]);
    check(validate_clustering(&learning, &named).is_valid(), "named formation partition is invalid")?;
    Ok(format!("chain 2 clusters incl. {{1,3}},{{2,4}}; formation {:?}", found.one_based()))
}

fn c2_learning_graph() -> Outcome {
    let mut graphs = 0;
    for n in 3..=8 {
        for seed in 0..20u64 {
            let mut rng = stream(seed, Purpose::Diagnostics, n as u64, 0);
            let mut s = DirectedGraph::directed_cycle(n, true).unwrap();
            for _ in 0..n {
                s.add_edge(rng.random_range(0..n), rng.random_range(0..n)).unwrap();
            }
            let cost = DirectedGraph::undirected_chain(n, true).unwrap();
            let l = build_learning_graph(&cost, &s).unwrap();
            let complete = (0..n).all(|a| (0..n).all(|b| l.has_edge(a, b)));
            check(complete, format!("n={n} seed={seed}: learning graph not complete"))?;
            graphs += 1;
        }
    }
    let mut rng = stream(2, Purpose::Diagnostics, 0, 1);
    for pair in 0..200 {
        let n = rng.random_range(1..=9);
        let ce: Vec<_> = (0..2 * n).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        let se: Vec<_> = (0..2 * n).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).collect();
        let cost = DirectedGraph::from_undirected_edges(n, true, &ce).unwrap();
        let sensing = DirectedGraph::from_edges(n, true, &se).unwrap();
        let l = build_learning_graph(&cost, &sensing).unwrap();
        for (a, b) in cost.edges() {
            check(l.has_edge(a, b) || l.has_edge(b, a), format!("pair {pair}: cost edge ({a},{b}) missing"))?;
        }
        for i in 0..n {
            for &j in &reachable_set(&sensing, i).unwrap().members {
                for k in cost.symmetric_neighbors(j) {
                    check(k == i || l.adjacent(i, k), format!("pair {pair}: {i} lacks {k}"))?;
                }
            }
        }
    }
    Ok(format!("{graphs} strongly connected graphs complete; 200 pairs contain the cost graph"))
}

fn c3_unbiased() -> Outcome {
    let obj = Quadratic::squared_norm(2).unwrap();
    let x = BlockVector::from_flat(&[2], vec![0.03, -0.04]).unwrap();
    let r = 0.01;
    let rep = mc_covariance(
        |_, rng| {
            let u = sample_unit_sphere(2, rng).unwrap();
            let mut p = x.clone();
            p.as_mut_slice().iter_mut().zip(&u).for_each(|(a, d)| *a += r * d);
            one_point_gradient(obj.exact_value(&p).unwrap(), &u, 2, r).unwrap()
        },
        1_000_000,
        3,
        0,
    )
    .map_err(|e| e.to_string())?;
    let grad = obj.exact_gradient(&x).unwrap();
    let err = rel_err(&rep.mean, grad.as_slice());
    check(err <= 0.02, format!("relative error {err:.4}"))?;
    Ok(format!("relative error {err:.4} (se {:.2e})", rep.mean_norm_se()))
}

fn c4_bias() -> Outcome {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0]);
    let obj = Quadratic::new(vec![2, 1], a, DVector::from_vec(vec![1.0, -2.0, 0.5]), 0.3).unwrap();
    let x = BlockVector::from_flat(&[2, 1], vec![0.2, -0.1, 0.4]).unwrap();
    let phi = obj.smoothness();
    let mut worst: f64 = 0.0;
    for r in [0.5, 0.1, 0.01] {
        for agent in 0..2 {
            let audit = bias_audit(&obj, &x, agent, r, phi, 1_000_000, 4).map_err(|e| e.to_string())?;
            check(audit.passed, format!("r={r} agent {agent}: bias {} > {}", audit.bias, audit.bound))?;
            worst = worst.max(audit.bias / audit.bound);
        }
    }
    Ok(format!("6 audits passed, largest bias/bound {worst:.3}"))
}

fn c5_covariance_gap() -> Outcome {
    let m = 1_000_000;
    let obj = PairwiseDisplacement::chain(4, 0.1).unwrap();
    let x = BlockVector::zeros(&obj.block_dims()).unwrap();
    let r = 0.1;
    let local = mc_covariance(|_, rng| local_estimate(&obj, &x, 0, r, rng), m, 5, 0).map_err(|e| e.to_string())?;
    let global =
        mc_covariance(|_, rng| global_estimate_block(&obj, &x, 0, r, rng), m, 5, 1).map_err(|e| e.to_string())?;
    let gap = covariance_gap(&local, &global, 0.0).map_err(|e| e.to_string())?;
    check(gap.significant, format!("4-agent gap z = {:.2}", gap.z))?;

    let two = PairwiseDisplacement::chain(2, 0.0).unwrap();
    let x = BlockVector::zeros(&two.block_dims()).unwrap();
    let r = 0.01;
    let local = mc_covariance(|_, rng| local_estimate(&two, &x, 0, r, rng), m, 5, 2).map_err(|e| e.to_string())?;
    let global =
        mc_covariance(|_, rng| global_estimate_block(&two, &x, 0, r, rng), m, 5, 3).map_err(|e| e.to_string())?;
    let h_sq = mc_covariance(
        |_, rng| {
            let z = sample_unit_sphere(2, rng).unwrap();
            let mut p = x.clone();
            p.as_mut_slice().iter_mut().zip(&z).for_each(|(a, d)| *a += r * d);
            vec![two.exact_value(&p).unwrap().powi(2)]
        },
        m,
        5,
        4,
    )
    .map_err(|e| e.to_string())?;
    let pred = predicted_gap_leading(1, 1, h_sq.mean[0], r);
    let rep = covariance_gap(&local, &global, pred).map_err(|e| e.to_string())?;
    let ratio = rep.ratio.unwrap_or(f64::NAN);
    check((ratio - 1.0).abs() <= 0.15, format!("gap/predicted = {ratio:.4}"))?;
    Ok(format!("4-agent gap z = {:.1}; 2-agent gap/predicted = {ratio:.4}", gap.z))
}

fn c6_oracles() -> Outcome {
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    let scalar = MasLqrSystem::new(
        vec![one(1.0)],
        vec![one(1.0)],
        1.0,
        one(1.0),
        one(1.0),
        vec![one(1.0)],
        DirectedGraph::new(1, true).unwrap(),
        vec![0],
        InitialState::default(),
    )
    .map_err(|e| e.to_string())?;
    let p = centralized_optimum(&scalar).map_err(|e| e.to_string())?.p[(0, 0)];
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    check((p - golden).abs() <= 1e-10, format!("P* = {p}"))?;

    let sys = chain3(0.95);
    let obj = LqrObjective::new(sys.clone(), 1).unwrap();
    let mut worst: f64 = 0.0;
    for k in random_stable_gains(&sys, 20, 6, 0.9) {
        let g = obj.projected_gradient(k.dense()).map_err(|e| e.to_string())?;
        let fd = fd_gradient(&k, None, |m| global_cost(&sys, m).unwrap());
        worst = worst.max(rel_err(&fd, g.as_slice()));
    }
    check(worst <= 1e-5, format!("gradient relative error {worst:.2e}"))?;

    let flat = sys.undiscounted();
    let mut scale_err: f64 = 0.0;
    for k in random_stable_gains(&sys, 20, 7, 0.95) {
        let (a, b) = (global_cost(&sys, k.dense()).unwrap(), global_cost(&flat, k.dense()).unwrap());
        scale_err = scale_err.max((a - b).abs() / a);
    }
    check(scale_err <= 1e-10, format!("discount scaling error {scale_err:.2e}"))?;
    Ok(format!("|P*-golden| {:.1e}; gradient rel err {worst:.1e}; scaling {scale_err:.1e}", (p - golden).abs()))
}

fn c7_local_gradient() -> Outcome {
    let obj = LqrObjective::new(chain3(0.95), 1).unwrap();
    let mut worst: f64 = 0.0;
    for k in random_stable_gains(obj.system(), 20, 8, 0.9) {
        let global = obj.projected_gradient(k.dense()).map_err(|e| e.to_string())?;
        for i in 0..3 {
            let fd_local = fd_gradient(&k, Some(i), |m| obj.local_cost(i, m).unwrap());
            let fd_global = fd_gradient(&k, Some(i), |m| global_cost(obj.system(), m).unwrap());
            worst = worst
                .max(rel_err(&fd_local, global.block(i)))
                .max(rel_err(&fd_local, &fd_global));
        }
    }
    check(worst <= 1e-5, format!("relative error {worst:.2e}"))?;
    Ok(format!("60 agent blocks, largest relative error {worst:.2e}"))
}

fn c8_horizon() -> Outcome {
    // the undiscounted copy gives identical rollout values without the
    // open-loop growth of the raw states
    let sys = chain3(0.9).undiscounted();
    let obj = LqrObjective::new(sys.clone(), 1).unwrap();
    let lam_min = sys.initial_state().variance();
    let mut rng = stream(8, Purpose::Diagnostics, 0, 0);
    let mut worst_ratio: f64 = 0.0;
    let mut horizons = (usize::MAX, 0);
    for k in contractive_gains(&sys, 100, 9) {
        let kappa = closed_loop_norm(&sys, k.dense());
        let x0 = sys.sample_x0(&mut rng);
        let lam_max: f64 = x0.iter().map(|v| v * v).sum();
        for eps in [1e-2, 1e-4] {
            for (i, spec) in obj.local_costs().iter().enumerate() {
                let j_i = obj.local_cost(i, k.dense()).map_err(|e| e.to_string())?;
                let t = required_horizon(eps, kappa, j_i, lam_max, lam_min).map_err(|e| e.to_string())?;
                let short = rollout_local_cost(&sys, k.dense(), &x0, t, spec).unwrap();
                let long = rollout_local_cost(&sys, k.dense(), &x0, 10 * t, spec).unwrap();
                check(!long.diverged, "reference rollout diverged")?;
                let err = long.value - short.value;
                check(err <= eps, format!("agent {i} eps {eps}: truncation error {err:.3e} at T={t}"))?;
                worst_ratio = worst_ratio.max(err / eps);
                horizons = (horizons.0.min(t), horizons.1.max(t));
            }
        }
    }
    Ok(format!(
        "100 gains, T_J in [{}, {}], largest error/eps {worst_ratio:.2e}",
        horizons.0, horizons.1
    ))
}

fn c9_generic_convergence() -> Outcome {
    let obj = PairwiseDisplacement::chain(4, 0.1).unwrap();
    let clustering = Clustering::new(vec![vec![0, 2], vec![1, 3]]);
    let x0 = BlockVector::zeros(&obj.block_dims()).unwrap();
    let f_x0 = obj.exact_value(&x0).unwrap();
    let fi_max = (0..4).map(|i| obj.exact_local_value(i, &x0).unwrap()).fold(0.0, f64::max);
    let (alpha, rho0) = (50.0, 1.0);
    // gradient of a local cost is at most 2 sqrt(2) per incident edge times the
    // residual, which is bounded on the alpha-sublevel set plus its rho0 ball
    let lambda0 = 4.0 * std::f64::consts::SQRT_2 * ((alpha * f_x0).sqrt() + 2.0 * rho0);
    let advise = |eps: f64| {
        advise_parameters(&AdvisorInput {
            eps,
            alpha,
            gamma: 1.0,
            nu: 1.0,
            phi0: obj.smoothness(),
            lambda0,
            rho0,
            c: obj.observation_bound(),
            f_x0,
            f0_x0: alpha * fi_max,
            n0: 2,
            q_plus: 1,
            r_minus: None,
            t0: None,
            eps_bar: None,
            variant: AdvisorVariant::Generic,
        })
        .unwrap()
    };
    let mut eps = 1.0;
    while advise(eps).iterations > 50_000 {
        eps *= 1.1;
    }
    let adv = advise(eps);
    let mut cfg = ZooConfig::uniform(4, adv.eta, adv.radius, adv.iterations);
    cfg.weight_caps = Some(adv.weight_caps);
    cfg.guard = f64::INFINITY;
    let sched = make_cyclic_schedule(2, adv.iterations);
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let t = run_async_zoo(&obj, &clustering, &sched, &cfg, &x0, seed).map_err(|e| e.to_string())?;
        let avg = t.mean_grad_sq_active().unwrap();
        worst = worst.max(avg);
        ok += usize::from(avg < eps);
    }
    check(ok >= 18, format!("{ok}/20 seeds below eps {eps:.3e}"))?;

    // a practical step size well outside the worst-case advice
    let f_star = obj
        .exact_value(&BlockVector::from_flat(&[1; 4], vec![3.0, 2.0, 1.0, 0.0]).unwrap())
        .unwrap();
    let iters = 20_000;
    let mut pcfg = ZooConfig::uniform(4, 1e-3, 0.1, iters);
    pcfg.guard = f64::INFINITY;
    let psched = make_cyclic_schedule(2, iters);
    let mut practical = 0;
    for seed in 0..20 {
        let t = run_async_zoo(&obj, &clustering, &psched, &pcfg, &x0, 100 + seed).map_err(|e| e.to_string())?;
        let tail = t.records[iters / 2..].iter().map(|r| r.grad_sq_active.unwrap()).sum::<f64>() / (iters / 2) as f64;
        practical += usize::from(tail < 1e-2 && t.final_f.unwrap() <= 1.05 * f_star);
    }
    check(practical >= 18, format!("practical run converged on {practical}/20 seeds"))?;
    Ok(format!(
        "advised eps {eps:.1} T {} eta {:.2e} r {}: {ok}/20 (largest avg {worst:.3}); practical {practical}/20",
        adv.iterations, adv.eta, adv.radius
    ))
}

fn c10_lqr_learning() -> Outcome {
    let cfg = ExperimentConfig::preset("chain-lqr").unwrap();
    let sc = build_scenario(&cfg).map_err(|e| e.to_string())?;
    let Problem::Lqr(obj) = &sc.problem else {
        return Err("chain preset is not an LQR scenario".into());
    };
    let run = run_distributed(&cfg, &sc, 0).map_err(|e| e.to_string())?;
    let curve = run.trace.cost_curve().ok_or("no exact costs")?;
    let final_cost = *curve.last().unwrap();
    let running_min = curve.iter().copied().fold(f64::INFINITY, f64::min);
    check(final_cost <= 1.05 * running_min, format!("final {final_cost} vs running min {running_min}"))?;
    let g0 = obj.projected_gradient(&obj.gain(&sc.x0).unwrap()).unwrap().norm();
    let g1 = obj.projected_gradient(&obj.gain(&run.trace.final_x).unwrap()).unwrap().norm();
    check(g0 >= 10.0 * g1, format!("gradient norm {g0:.3e} -> {g1:.3e}"))?;
    let chain = format!("chain J {:.3} -> {final_cost:.3}, |grad| {g0:.2e} -> {g1:.2e}", curve[0]);

    let cfg = ExperimentConfig::preset("formation").unwrap();
    let sc = build_scenario(&cfg).map_err(|e| e.to_string())?;
    let j_star = sc.j_star.unwrap();
    let mut finals = Vec::new();
    for seed in 0..3 {
        let run = run_distributed(&cfg, &sc, seed).map_err(|e| e.to_string())?;
        let curve = run.trace.cost_curve().ok_or("no exact costs")?;
        if let Some((k, v)) = curve.iter().enumerate().find(|(_, v)| !(**v > j_star)) {
            return Err(format!("seed {seed}: cost {v} at iteration {k} is not above J* {j_star}"));
        }
        let (first, last) = (curve[0], *curve.last().unwrap());
        check(last - j_star < 0.5 * (first - j_star), format!("seed {seed}: {first} -> {last}, J* {j_star}"))?;
        finals.push(last);
    }
    Ok(format!(
        "{chain}; formation J* {j_star:.2}, J0 {:.2}, finals {:?}",
        formation_initial(&sc),
        finals.iter().map(|v| (v * 100.0).round() / 100.0).collect::<Vec<_>>()
    ))
}

fn formation_initial(sc: &blockzoo::harness::Scenario) -> f64 {
    sc.objective().exact_value(&sc.x0).unwrap_or(f64::NAN)
}

fn c11_variance() -> Outcome {
    let mut cfg = ExperimentConfig::preset("formation").unwrap();
    cfg.lqr.repeats = 50;
    cfg.lqr.repeat_every = 10;
    let sc = build_scenario(&cfg).map_err(|e| e.to_string())?;
    let (mut smaller, mut total) = (0, 0);
    for seed in 0..2 {
        let d = run_distributed(&cfg, &sc, seed).map_err(|e| e.to_string())?;
        let b = run_baseline(&cfg, &sc, seed).map_err(|e| e.to_string())?;
        for (x, y) in d.bands.iter().zip(&b.bands) {
            check(x.iter == y.iter, "band rows are not aligned")?;
            total += 1;
            smaller += usize::from(x.spread() < y.spread());
        }
    }
    check(total > 0, "no measured iterations")?;
    let frac = smaller as f64 / total as f64;
    check(frac >= 0.9, format!("distributed spread smaller in {smaller}/{total}"))?;
    Ok(format!("distributed spread smaller in {smaller}/{total} measured iterations"))
}

fn c12_acceleration() -> Outcome {
    let cfg0 = ExperimentConfig::preset("formation").unwrap();
    let mut cfg5 = cfg0.clone();
    cfg5.zoo.w_base = 0.5;
    let sc = build_scenario(&cfg0).map_err(|e| e.to_string())?;
    let seeds: Vec<u64> = (0..12).collect();
    let mut runs0 = Vec::new();
    let mut runs5 = Vec::new();
    for &s in &seeds {
        runs0.push(run_distributed(&cfg0, &sc, s).map_err(|e| e.to_string())?.trace);
        runs5.push(run_distributed(&cfg5, &sc, s).map_err(|e| e.to_string())?.trace);
    }
    let j0 = runs0[0].cost_curve().unwrap()[0];
    let mut finals: Vec<f64> = runs0.iter().map(|t| t.final_f.unwrap()).collect();
    let jt = median(&mut finals);
    let threshold = j0 - 0.5 * (j0 - jt);
    let hit = |t: &blockzoo::zoo::RunTrace| t.first_below(threshold).map_or(f64::INFINITY, |k| k as f64);
    let mut it0: Vec<f64> = runs0.iter().map(hit).collect();
    let mut it5: Vec<f64> = runs5.iter().map(hit).collect();
    let wins = it0.iter().zip(&it5).filter(|(a, b)| b <= a).count();
    let (m0, m5) = (median(&mut it0), median(&mut it5));
    check(m5 <= m0, format!("median iterations w=0.5 {m5} > w=0 {m0}"))?;
    Ok(format!(
        "threshold {threshold:.2}: median iterations w=0 {m0}, w=0.5 {m5}; w=0.5 no slower on {wins}/{}",
        seeds.len()
    ))
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn same_artifacts(a: &Path, b: &Path, m: &blockzoo::harness::Manifest) -> Result<usize, String> {
    let mut files: Vec<String> = m.runs.iter().filter_map(|r| r.trace.clone()).collect();
    files.extend(m.runs.iter().filter_map(|r| r.bands.clone()));
    files.extend(m.aggregates.iter().cloned());
    for f in &files {
        let (x, y) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
        check(matches!((&x, &y), (Ok(x), Ok(y)) if x == y), format!("{f} differs"))?;
    }
    Ok(files.len())
}

fn c13_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for (name, t_k) in [("chain-lqr", 300), ("formation", 100)] {
        let mut cfg = ExperimentConfig::preset(name).unwrap();
        cfg.lqr.t_k = t_k;
        cfg.lqr.baseline = true;
        cfg.lqr.repeats = 5;
        cfg.output.n_seeds = 2;
        cfg.zoo.parallel = true;
        let dir_a = tmp.path().join(format!("{name}-a"));
        let dir_b = tmp.path().join(format!("{name}-b"));
        cfg.output.dir = dir_a.clone();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let m = one.install(|| run_experiment(&cfg)).map_err(|e| e.to_string())?;
        check(m.runs.iter().all(|r| r.error.is_none()), format!("{name}: a run failed"))?;
        let text = std::fs::read_to_string(dir_a.join("manifest.json")).map_err(|e| e.to_string())?;
        let mut again = ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?;
        again.output.dir = dir_b.clone();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        four.install(|| run_experiment(&again)).map_err(|e| e.to_string())?;
        compared += same_artifacts(&dir_a, &dir_b, &m)?;
    }
    Ok(format!("{compared} artifact files identical across 1 and 4 threads"))
}

fn main() {
    type Criterion = (u32, &'static str, u64, fn() -> Outcome);
    let criteria: [Criterion; 13] = [
        (1, "clustering", 1, c1_clustering),
        (2, "learning graph", 5, c2_learning_graph),
        (3, "estimator unbiasedness", 30, c3_unbiased),
        (4, "bias bound", 120, c4_bias),
        (5, "covariance gap", 120, c5_covariance_gap),
        (6, "LQR oracles", 30, c6_oracles),
        (7, "local gradient equals global", 60, c7_local_gradient),
        (8, "rollout horizon bound", 120, c8_horizon),
        (9, "generic convergence", 300, c9_generic_convergence),
        (10, "LQR learning", 900, c10_lqr_learning),
        (11, "estimate spread vs baseline", 900, c11_variance),
        (12, "extrapolation speeds up", 900, c12_acceleration),
        (13, "determinism", 120, c13_determinism),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, budget, f) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(d) if elapsed > Duration::from_secs(budget) => Err(format!("{d}; took {elapsed:.1?}, budget {budget} s")),
            o => o,
        };
        match outcome {
            Ok(d) => println!("PASS {id:>2} {name} ({elapsed:.2?}): {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id:>2} {name} ({elapsed:.2?}): {d}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lqr::{DistributedGain, GainPattern, InitialState, MasLqrSystem};
use crate::netgraph::DirectedGraph;

/// Default formation graphs for `n` robots (0-based ids):
/// an undirected cost ring, leaders at the even 0-based ids (1, 3, 5, ...
/// in 1-based terms), and each follower sensing the leaders on either side
/// of it on the ring.
pub fn default_formation_graphs(n: usize) -> (Vec<(usize, usize)>, Vec<(usize, usize)>, Vec<usize>) {
    let cost: Vec<(usize, usize)> = match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|i| (i, (i + 1) % n)).collect(),
    };
    let leaders: Vec<usize> = (0..n).step_by(2).collect();
    let mut sensing = Vec::new();
    for f in (1..n).step_by(2) {
        let left = f - 1;
        sensing.push((left, f));
        let right = (f + 1) % n;
        if right != left && right.is_multiple_of(2) {
            sensing.push((right, f));
        }
    }
    (cost, sensing, leaders)
}

/// Every robot must be reachable from some leader along sensing edges.
fn check_spanning_forest(sensing: &DirectedGraph, leaders: &[usize]) -> Result<()> {
    let n = sensing.n_vertices();
    let mut covered = vec![false; n];
    for &l in leaders {
        for v in sensing.reachable_from(l)? {
            covered[v] = true;
        }
    }
    match covered.iter().position(|c| !c) {
        Some(v) => Err(Error::Config(format!(
            "sensing graph has no spanning forest from the leaders: robot {} is not reachable from any leader",
            v + 1
        ))),
        None => Ok(()),
    }
}

/// Target-relative formation system: double-integrator robots
/// `A_i = [[I, I], [0, I]]`, `B_i = [0; C_i]` with `C_i = (i/(i+1)) I`
/// (1-based `i`), state cost `(L + Lambda) (x) I_4` where `L` is the cost-ring
/// Laplacian and `Lambda` marks leaders, unit input cost, and the initial gain
/// `I_N (x) (I, 1.5 I)` on the sensing pattern.
pub fn build_formation_scenario(
    n_robots: usize,
    cost_edges: &[(usize, usize)],
    sensing_edges: &[(usize, usize)],
    leaders: &[usize],
    gamma: f64,
) -> Result<(MasLqrSystem, DistributedGain)> {
    if n_robots == 0 {
        return Err(Error::Config("formation needs at least one robot".into()));
    }
    if leaders.is_empty() {
        return Err(Error::Config("formation needs at least one leader".into()));
    }
    let cfg = |e: Error| Error::Config(e.to_string());
    let sensing = DirectedGraph::from_edges(n_robots, true, sensing_edges).map_err(cfg)?;
    if leaders.iter().any(|&l| l >= n_robots) {
        return Err(Error::Config("leader id out of range".into()));
    }
    check_spanning_forest(&sensing, leaders)?;

    let mut g = DMatrix::<f64>::zeros(n_robots, n_robots);
    for &(a, b) in cost_edges {
        if a >= n_robots || b >= n_robots {
            return Err(Error::Config(format!("cost edge ({}, {}) out of range", a + 1, b + 1)));
        }
        if a == b || g[(a, b)] != 0.0 {
            continue;
        }
        g[(a, a)] += 1.0;
        g[(b, b)] += 1.0;
        g[(a, b)] -= 1.0;
        g[(b, a)] -= 1.0;
    }
    for &l in leaders {
        g[(l, l)] += 1.0;
    }

    let i2 = DMatrix::<f64>::identity(2, 2);
    let mut a_i = DMatrix::<f64>::identity(4, 4);
    a_i.view_mut((0, 2), (2, 2)).copy_from(&i2);
    let a = vec![a_i; n_robots];
    let b = (0..n_robots)
        .map(|i| {
            let c = (i + 1) as f64 / (i + 2) as f64;
            let mut b_i = DMatrix::<f64>::zeros(4, 2);
            b_i.view_mut((2, 0), (2, 2)).copy_from(&(&i2 * c));
            b_i
        })
        .collect();
    let q_tilde = DMatrix::<f64>::from_element(n_robots, n_robots, 1.0).kronecker(&DMatrix::identity(4, 4));
    let r = vec![i2.clone(); n_robots];
    let sys = MasLqrSystem::new(
        a,
        b,
        gamma,
        g,
        q_tilde,
        r,
        sensing,
        leaders.to_vec(),
        InitialState::default(),
    )
    .map_err(cfg)?;

    let pattern = GainPattern::from_sensing(sys.sensing(), 4, 2);
    let mut k_tilde = DMatrix::<f64>::zeros(2, 4);
    k_tilde.view_mut((0, 0), (2, 2)).copy_from(&i2);
    k_tilde.view_mut((0, 2), (2, 2)).copy_from(&(&i2 * 1.5));
    let k0 = DMatrix::<f64>::identity(n_robots, n_robots).kronecker(&k_tilde);
    let k0 = DistributedGain::new(pattern, k0)?;
    Ok((sys, k0))
}

/// Formation system with the default graphs.
pub fn default_formation(n_robots: usize, gamma: f64) -> Result<(MasLqrSystem, DistributedGain)> {
    let (cost, sensing, leaders) = default_formation_graphs(n_robots);
    build_formation_scenario(n_robots, &cost, &sensing, &leaders, gamma)
}

/// Desk instance: `n` scalar integrators `x_i(t+1) = x_i + u_i`, state cost
/// `L + I` over the path `1 - 2 - ... - n`, unit input cost, sensing chain
/// `1 -> 2 -> ... -> n`, and initial gain `0.1 I`.
pub fn chain_lqr_scenario(n: usize, gamma: f64) -> Result<(MasLqrSystem, DistributedGain)> {
    if n == 0 {
        return Err(Error::Config("chain needs at least one agent".into()));
    }
    let mut g = DMatrix::<f64>::identity(n, n);
    for i in 1..n {
        g[(i - 1, i - 1)] += 1.0;
        g[(i, i)] += 1.0;
        g[(i - 1, i)] -= 1.0;
        g[(i, i - 1)] -= 1.0;
    }
    let one = DMatrix::from_element(1, 1, 1.0);
    let sensing = DirectedGraph::directed_chain(n, true)?;
    let sys = MasLqrSystem::new(
        vec![one.clone(); n],
        vec![one.clone(); n],
        gamma,
        g,
        DMatrix::from_element(n, n, 1.0),
        vec![one; n],
        sensing,
        vec![0],
        InitialState::default(),
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let pattern = GainPattern::from_sensing(sys.sensing(), 1, 1);
    let k0 = DistributedGain::new(pattern, DMatrix::identity(n, n) * 0.1)?;
    Ok((sys, k0))
}

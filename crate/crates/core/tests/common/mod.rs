#![allow(dead_code)]

use blockzoo::lqr::{assemble_closed_loop, scaled_radius, DistributedGain, GainPattern, InitialState, MasLqrSystem};
use blockzoo::netgraph::DirectedGraph;
use blockzoo::rng::{stream, Purpose};
use nalgebra::DMatrix;
use rand::Rng;

/// Three agents with two-dimensional states on a cost path, sensing chain
/// `1 -> 2 -> 3`.
pub fn chain3(gamma: f64) -> MasLqrSystem {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, -0.1, 0.9]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let g = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 3.0, -1.0, 0.0, -1.0, 2.0]);
    let q_tilde = DMatrix::from_element(3, 3, 1.0).kronecker(&DMatrix::<f64>::identity(2, 2));
    MasLqrSystem::new(
        vec![a; 3],
        vec![b; 3],
        gamma,
        g,
        q_tilde,
        vec![DMatrix::from_element(1, 1, 1.0); 3],
        DirectedGraph::directed_chain(3, true).unwrap(),
        vec![0],
        InitialState::default(),
    )
    .unwrap()
}

/// Random gains on the sensing pattern around the decentralized gain
/// `[0.5, 1.0]`, kept only if the scaled spectral radius stays below `max_radius`.
pub fn random_stable_gains(sys: &MasLqrSystem, count: usize, seed: u64, max_radius: f64) -> Vec<DistributedGain> {
    gains_around(sys, count, seed, [0.5, 1.0], 0.3, |k| scaled_radius(sys, k).unwrap() < max_radius)
}

/// Gains with `||sqrt(gamma)(A - BK)||_2 < 1`.
pub fn contractive_gains(sys: &MasLqrSystem, count: usize, seed: u64) -> Vec<DistributedGain> {
    gains_around(sys, count, seed, [-0.1, 0.9], 0.05, |k| closed_loop_norm(sys, k) < 1.0)
}

pub fn closed_loop_norm(sys: &MasLqrSystem, k: &DMatrix<f64>) -> f64 {
    (assemble_closed_loop(sys, k).unwrap() * sys.gamma().sqrt()).singular_values().max()
}

fn gains_around(
    sys: &MasLqrSystem,
    count: usize,
    seed: u64,
    diag: [f64; 2],
    spread: f64,
    keep: impl Fn(&DMatrix<f64>) -> bool,
) -> Vec<DistributedGain> {
    let pattern = GainPattern::from_sensing(sys.sensing(), sys.state_dim(), sys.input_dim());
    let n_agents = sys.n_agents();
    let mut base = DMatrix::<f64>::zeros(n_agents, 2 * n_agents);
    for i in 0..n_agents {
        base[(i, 2 * i)] = diag[0];
        base[(i, 2 * i + 1)] = diag[1];
    }
    let mut rng = stream(seed, Purpose::Diagnostics, 77, 0);
    let mut out = Vec::new();
    while out.len() < count {
        let mut k = base.clone();
        for i in 0..n_agents {
            for j in 0..2 * n_agents {
                if pattern.allows(i, j / 2) {
                    k[(i, j)] += rng.random_range(-spread..spread);
                }
            }
        }
        if keep(&k) {
            out.push(DistributedGain::new(pattern.clone(), k).unwrap());
        }
    }
    out
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(1e-300)
}

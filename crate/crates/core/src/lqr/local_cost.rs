use nalgebra::DMatrix;

use super::system::{block_diag, masked_state_cost, MasLqrSystem};
use crate::error::{Error, Result};
use crate::netgraph::{build_learning_graph, reachable_set, DirectedGraph, ReachSet};

/// Agents whose cost couplings agent `i`'s gain can affect:
/// the union of cost neighborhoods over the agents reachable from `i`.
pub fn support_of(cost: &DirectedGraph, reach: &ReachSet) -> Vec<usize> {
    let mut s: Vec<usize> = reach
        .members
        .iter()
        .flat_map(|&j| cost.symmetric_neighbors(j))
        .collect();
    s.sort_unstable();
    s.dedup();
    s
}

/// Mask matrix `M_i`: equal to `G` on the principal submatrix indexed by the
/// support of agent `i`, zero elsewhere. The defining constraints (agreement
/// with `G` on every cost edge touching a reachable agent, zero rows and
/// columns outside the support, positive semidefiniteness) are verified.
pub fn solve_mi(g: &DMatrix<f64>, reach: &ReachSet, cost: &DirectedGraph) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    if g.shape() != (n, n) || cost.n_vertices() != n {
        return Err(Error::arg("coupling matrix and cost graph sizes differ"));
    }
    let support = support_of(cost, reach);
    let mut inside = vec![false; n];
    support.iter().for_each(|&s| inside[s] = true);
    let m = DMatrix::from_fn(n, n, |r, c| if inside[r] && inside[c] { g[(r, c)] } else { 0.0 });

    for &j in &reach.members {
        for k in cost.symmetric_neighbors(j) {
            if m[(j, k)] != g[(j, k)] || m[(k, j)] != g[(k, j)] {
                return Err(Error::Internal(format!(
                    "mask for agent {} disagrees with G at ({}, {})",
                    reach.source + 1,
                    j + 1,
                    k + 1
                )));
            }
        }
    }
    for r in 0..n {
        if !inside[r] && (m.row(r).amax() != 0.0 || m.column(r).amax() != 0.0) {
            return Err(Error::Internal(format!("mask has support outside row/column {}", r + 1)));
        }
    }
    let min_eig = m.clone().symmetric_eigenvalues().min();
    if min_eig < -1e-10 * (1.0 + g.amax()) {
        return Err(Error::Internal(format!(
            "mask for agent {} is not positive semidefinite (eigenvalue {min_eig:e})",
            reach.source + 1
        )));
    }
    Ok(m)
}

/// Local cost of one agent, on full vectors and reduced to its learning
/// neighborhood.
#[derive(Debug, Clone)]
pub struct LocalCostSpec {
    pub agent: usize,
    /// Sorted learning neighborhood `N_L^i`.
    pub neighborhood: Vec<usize>,
    pub mask: DMatrix<f64>,
    /// `M_i (.) Qtilde` on the full state.
    pub q_hat: DMatrix<f64>,
    /// `diag{R_j}` placed at `j in N_L^i`, zero elsewhere.
    pub r_hat: DMatrix<f64>,
    /// Principal submatrix of `q_hat` on the neighborhood blocks.
    pub q_bar: DMatrix<f64>,
    pub r_bar: DMatrix<f64>,
}

impl LocalCostSpec {
    /// Reduced quadratic `x_L' Qbar x_L + u_L' Rbar u_L` on full vectors.
    pub fn stage_cost(&self, x: &[f64], u: &[f64], n: usize, m: usize) -> f64 {
        let xl: Vec<f64> = gather(x, &self.neighborhood, n);
        let ul: Vec<f64> = gather(u, &self.neighborhood, m);
        quad(&self.q_bar, &xl) + quad(&self.r_bar, &ul)
    }
}

pub(crate) fn gather(v: &[f64], agents: &[usize], dim: usize) -> Vec<f64> {
    agents
        .iter()
        .flat_map(|&j| v[j * dim..(j + 1) * dim].iter().copied())
        .collect()
}

pub(crate) fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for c in 0..m.ncols() {
        let vc = v[c];
        if vc == 0.0 {
            continue;
        }
        let col = m.column(c);
        let mut s = 0.0;
        for r in 0..m.nrows() {
            s += col[r] * v[r];
        }
        acc += s * vc;
    }
    acc
}

fn principal_blocks(m: &DMatrix<f64>, agents: &[usize], dim: usize) -> DMatrix<f64> {
    let d = agents.len() * dim;
    DMatrix::from_fn(d, d, |r, c| {
        let (ar, ac) = (agents[r / dim], agents[c / dim]);
        m[(ar * dim + r % dim, ac * dim + c % dim)]
    })
}

/// Learning graph and one local cost per agent.
pub fn build_local_costs(sys: &MasLqrSystem) -> Result<(DirectedGraph, Vec<LocalCostSpec>)> {
    let learning = build_learning_graph(sys.cost_graph(), sys.sensing())?;
    let (n, m) = (sys.state_dim(), sys.input_dim());
    let n_agents = sys.n_agents();
    let mut specs = Vec::with_capacity(n_agents);
    for i in 0..n_agents {
        let reach = reachable_set(sys.sensing(), i)?;
        let mask = solve_mi(sys.coupling(), &reach, sys.cost_graph())?;
        let neighborhood = learning.in_neighbors(i);
        if neighborhood != support_of(sys.cost_graph(), &reach) {
            return Err(Error::Internal(format!(
                "learning neighborhood of agent {} differs from its cost support",
                i + 1
            )));
        }
        let q_hat = masked_state_cost(&mask, sys.q_tilde(), n);
        let r_blocks: Vec<DMatrix<f64>> = (0..n_agents)
            .map(|j| {
                if neighborhood.contains(&j) {
                    sys.r_blocks()[j].clone()
                } else {
                    DMatrix::zeros(m, m)
                }
            })
            .collect();
        let r_hat = block_diag(&r_blocks);
        let q_bar = principal_blocks(&q_hat, &neighborhood, n);
        let r_bar = block_diag(&neighborhood.iter().map(|&j| sys.r_blocks()[j].clone()).collect::<Vec<_>>());
        specs.push(LocalCostSpec {
            agent: i,
            neighborhood,
            mask,
            q_hat,
            r_hat,
            q_bar,
            r_bar,
        });
    }
    Ok((learning, specs))
}

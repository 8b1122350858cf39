use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::DirectedGraph;
use crate::rng::{truncated_normal, truncated_normal_variance, StreamRng};

/// Componentwise i.i.d. zero-mean Gaussian initial state truncated at
/// `bound` standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub std: f64,
    pub bound: f64,
}

impl Default for InitialState {
    fn default() -> Self {
        Self { std: 1.0, bound: 3.0 }
    }
}

impl InitialState {
    pub fn variance(&self) -> f64 {
        self.std * self.std * truncated_normal_variance(self.bound)
    }

    /// Largest possible `||x0||^2` over the support, for a state of dimension `dim`.
    pub fn max_sq_norm(&self, dim: usize) -> f64 {
        dim as f64 * (self.bound * self.std).powi(2)
    }

    pub fn sample(&self, dim: usize, rng: &mut StreamRng) -> Vec<f64> {
        (0..dim).map(|_| truncated_normal(rng, self.std, self.bound)).collect()
    }
}

/// Networked LQR problem with decoupled agent dynamics
/// `x_i(t+1) = A_i x_i(t) + B_i u_i(t)` and coupled quadratic cost
/// `sum_t gamma^t (x'Qx + u'Ru)` with `Q = G (.) Qtilde` blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MasLqrSystem {
    n: usize,
    m: usize,
    a: Vec<DMatrix<f64>>,
    b: Vec<DMatrix<f64>>,
    gamma: f64,
    g: DMatrix<f64>,
    q_tilde: DMatrix<f64>,
    r: Vec<DMatrix<f64>>,
    sensing: DirectedGraph,
    cost: DirectedGraph,
    leaders: Vec<usize>,
    init: InitialState,
}

fn is_psd(m: &DMatrix<f64>, tol: f64) -> bool {
    m.clone().symmetric_eigenvalues().iter().all(|&v| v >= -tol)
}

fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol * (1.0 + m.amax())
}

impl MasLqrSystem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        a: Vec<DMatrix<f64>>,
        b: Vec<DMatrix<f64>>,
        gamma: f64,
        g: DMatrix<f64>,
        q_tilde: DMatrix<f64>,
        r: Vec<DMatrix<f64>>,
        sensing: DirectedGraph,
        leaders: Vec<usize>,
        init: InitialState,
    ) -> Result<Self> {
        let n_agents = a.len();
        if n_agents == 0 {
            return Err(Error::arg("system needs at least one agent"));
        }
        let n = a[0].nrows();
        let m = b[0].ncols();
        if n == 0 || m == 0 {
            return Err(Error::arg("state and input dimensions must be positive"));
        }
        if b.len() != n_agents || r.len() != n_agents {
            return Err(Error::arg("one A, B and R block per agent is required"));
        }
        for i in 0..n_agents {
            if a[i].shape() != (n, n) || b[i].shape() != (n, m) || r[i].shape() != (m, m) {
                return Err(Error::arg(format!(
                    "agent {} has inconsistent block shapes (A {:?}, B {:?}, R {:?})",
                    i + 1,
                    a[i].shape(),
                    b[i].shape(),
                    r[i].shape()
                )));
            }
            if !is_symmetric(&r[i], 1e-12) || r[i].clone().symmetric_eigenvalues().min() <= 0.0 {
                return Err(Error::arg(format!("R block of agent {} must be symmetric positive definite", i + 1)));
            }
        }
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::arg(format!("discount must lie in (0, 1], got {gamma}")));
        }
        if g.shape() != (n_agents, n_agents) || !is_symmetric(&g, 1e-12) || !is_psd(&g, 1e-10) {
            return Err(Error::arg("coupling matrix G must be N x N, symmetric and positive semidefinite"));
        }
        let nn = n * n_agents;
        if q_tilde.shape() != (nn, nn) || !is_symmetric(&q_tilde, 1e-12) {
            return Err(Error::arg(format!("state cost template must be a symmetric {nn} x {nn} matrix")));
        }
        if sensing.n_vertices() != n_agents || !sensing.has_self_loops() {
            return Err(Error::arg("sensing graph must cover every agent and carry self-loops"));
        }
        if leaders.iter().any(|&l| l >= n_agents) {
            return Err(Error::arg("leader id out of range"));
        }
        if !(init.std > 0.0 && init.bound > 0.0) {
            return Err(Error::arg("initial-state spread and truncation must be positive"));
        }
        let mut cost = DirectedGraph::new(n_agents, true)?;
        for i in 0..n_agents {
            for j in 0..n_agents {
                if i != j && g[(i, j)] != 0.0 {
                    cost.add_edge(i, j)?;
                }
            }
        }
        let sys = Self {
            n,
            m,
            a,
            b,
            gamma,
            g,
            q_tilde,
            r,
            sensing,
            cost,
            leaders,
            init,
        };
        if !is_psd(&sys.q_full(), 1e-9) {
            return Err(Error::arg("state cost G (.) Qtilde must be positive semidefinite"));
        }
        Ok(sys)
    }

    pub fn n_agents(&self) -> usize {
        self.a.len()
    }

    pub fn state_dim(&self) -> usize {
        self.n
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn a_blocks(&self) -> &[DMatrix<f64>] {
        &self.a
    }

    pub fn b_blocks(&self) -> &[DMatrix<f64>] {
        &self.b
    }

    pub fn r_blocks(&self) -> &[DMatrix<f64>] {
        &self.r
    }

    pub fn coupling(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn q_tilde(&self) -> &DMatrix<f64> {
        &self.q_tilde
    }

    pub fn sensing(&self) -> &DirectedGraph {
        &self.sensing
    }

    /// Undirected graph of nonzero couplings in `G`.
    pub fn cost_graph(&self) -> &DirectedGraph {
        &self.cost
    }

    pub fn leaders(&self) -> &[usize] {
        &self.leaders
    }

    pub fn initial_state(&self) -> &InitialState {
        &self.init
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut s = self.clone();
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::arg(format!("discount must lie in (0, 1], got {gamma}")));
        }
        s.gamma = gamma;
        Ok(s)
    }

    /// Undiscounted system with blocks scaled by `sqrt(gamma)`.
    pub fn undiscounted(&self) -> Self {
        let s = self.gamma.sqrt();
        let mut out = self.clone();
        out.a.iter_mut().for_each(|a| *a *= s);
        out.b.iter_mut().for_each(|b| *b *= s);
        out.gamma = 1.0;
        out
    }

    pub fn a_full(&self) -> DMatrix<f64> {
        block_diag(&self.a)
    }

    pub fn b_full(&self) -> DMatrix<f64> {
        block_diag(&self.b)
    }

    pub fn r_full(&self) -> DMatrix<f64> {
        block_diag(&self.r)
    }

    /// `Q = G (.) Qtilde`: block `(i, j)` is `G_ij Qtilde(i, j)`.
    pub fn q_full(&self) -> DMatrix<f64> {
        masked_state_cost(&self.g, &self.q_tilde, self.n)
    }

    /// Second moment of the initial state.
    pub fn sigma_x(&self) -> DMatrix<f64> {
        DMatrix::identity(self.n * self.n_agents(), self.n * self.n_agents()) * self.init.variance()
    }

    pub fn sample_x0(&self, rng: &mut StreamRng) -> Vec<f64> {
        self.init.sample(self.n * self.n_agents(), rng)
    }
}

/// Block product `mask (.) template` with `n x n` blocks.
pub fn masked_state_cost(mask: &DMatrix<f64>, template: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut q = template.clone();
    for i in 0..mask.nrows() {
        for j in 0..mask.ncols() {
            let w = mask[(i, j)];
            let mut blk = q.view_mut((i * n, j * n), (n, n));
            blk *= w;
        }
    }
    q
}

pub fn block_diag(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

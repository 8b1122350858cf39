use nalgebra::{DMatrix, DVector};

use super::block::{norm_sq, BlockVector};
use crate::error::{Error, Result};
use crate::netgraph::DirectedGraph;
use crate::rng::{truncated_normal, truncated_normal_variance, StreamRng};

/// A problem split over agents, observed only through noisy local costs.
///
/// Agent `i` observes `h_i(x, xi) >= 0`, which may depend only on the blocks of
/// its in-neighbors in [`graph`](Self::graph). The exact oracles are optional
/// and are used for recording and verification, never by the optimizer.
pub trait NetworkedObjective: Sync {
    fn block_dims(&self) -> Vec<usize>;

    fn n_agents(&self) -> usize {
        self.block_dims().len()
    }

    /// Interaction graph; `(j, i)` is an edge iff `h_i` may read `x_j`.
    fn graph(&self) -> &DirectedGraph;

    /// Draw one noise realization shared by every agent updated in a step.
    fn sample_noise(&self, rng: &mut StreamRng) -> Vec<f64>;

    /// Local observation `h_i(x, xi)`.
    fn local_observation(&self, agent: usize, x: &BlockVector, noise: &[f64]) -> f64;

    /// Global observation `h(x, xi)`, used by centralized estimators.
    fn global_observation(&self, x: &BlockVector, noise: &[f64]) -> f64;

    /// Constant `c` with `h_i <= c f_i` almost surely.
    fn observation_bound(&self) -> f64 {
        1.0
    }

    fn exact_value(&self, _x: &BlockVector) -> Option<f64> {
        None
    }

    fn exact_local_value(&self, _agent: usize, _x: &BlockVector) -> Option<f64> {
        None
    }

    fn exact_gradient(&self, _x: &BlockVector) -> Option<BlockVector> {
        None
    }
}

/// Sum of pairwise displacement penalties over an undirected edge set:
/// `h = sum_{(i,j)} || x_i - x_j + xi_ij - d_ij ||^2`, where `d_ij` is the
/// desired displacement and `xi_ij` is truncated Gaussian edge noise. Agent `i`
/// observes the terms of its incident edges.
#[derive(Debug, Clone)]
pub struct PairwiseDisplacement {
    dim: usize,
    n_agents: usize,
    edges: Vec<(usize, usize)>,
    targets: Vec<Vec<f64>>,
    noise_std: f64,
    noise_bound: f64,
    graph: DirectedGraph,
    incident: Vec<Vec<usize>>,
}

impl PairwiseDisplacement {
    pub fn new(
        n_agents: usize,
        dim: usize,
        edges: Vec<(usize, usize)>,
        targets: Vec<Vec<f64>>,
        noise_std: f64,
    ) -> Result<Self> {
        if dim == 0 || n_agents == 0 {
            return Err(Error::arg("need at least one agent of positive dimension"));
        }
        if targets.len() != edges.len() || targets.iter().any(|t| t.len() != dim) {
            return Err(Error::arg("one target displacement of length `dim` per edge"));
        }
        if noise_std < 0.0 {
            return Err(Error::arg("noise standard deviation must be nonnegative"));
        }
        let graph = DirectedGraph::from_undirected_edges(n_agents, true, &edges)?;
        let mut incident = vec![Vec::new(); n_agents];
        for (e, &(a, b)) in edges.iter().enumerate() {
            incident[a].push(e);
            if b != a {
                incident[b].push(e);
            }
        }
        Ok(Self {
            dim,
            n_agents,
            edges,
            targets,
            noise_std,
            noise_bound: 3.0,
            graph,
            incident,
        })
    }

    /// Scalar agents on the path `1 - 2 - ... - n`, unit desired displacement
    /// on every edge.
    pub fn chain(n_agents: usize, noise_std: f64) -> Result<Self> {
        let edges: Vec<_> = (1..n_agents).map(|i| (i - 1, i)).collect();
        let targets = vec![vec![1.0]; edges.len()];
        Self::new(n_agents, 1, edges, targets, noise_std)
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    fn residual(&self, e: usize, x: &BlockVector, noise: Option<&[f64]>) -> Vec<f64> {
        let (a, b) = self.edges[e];
        (0..self.dim)
            .map(|c| {
                let xi = noise.map_or(0.0, |n| n[e * self.dim + c]);
                x.block(a)[c] - x.block(b)[c] + xi - self.targets[e][c]
            })
            .collect()
    }

    fn noise_variance(&self) -> f64 {
        self.noise_std * self.noise_std * truncated_normal_variance(self.noise_bound)
    }

    /// Expected value of one edge term.
    fn edge_value(&self, e: usize, x: &BlockVector) -> f64 {
        norm_sq(&self.residual(e, x, None)) + self.dim as f64 * self.noise_variance()
    }

    /// Exact gradient Lipschitz constant: twice the largest Laplacian eigenvalue.
    pub fn smoothness(&self) -> f64 {
        let mut lap = DMatrix::<f64>::zeros(self.n_agents, self.n_agents);
        for &(a, b) in &self.edges {
            if a != b {
                lap[(a, a)] += 1.0;
                lap[(b, b)] += 1.0;
                lap[(a, b)] -= 1.0;
                lap[(b, a)] -= 1.0;
            }
        }
        2.0 * lap.symmetric_eigenvalues().max()
    }
}

impl NetworkedObjective for PairwiseDisplacement {
    fn block_dims(&self) -> Vec<usize> {
        vec![self.dim; self.n_agents]
    }

    fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    fn sample_noise(&self, rng: &mut StreamRng) -> Vec<f64> {
        let len = self.edges.len() * self.dim;
        if self.noise_std == 0.0 {
            return vec![0.0; len];
        }
        (0..len)
            .map(|_| truncated_normal(rng, self.noise_std, self.noise_bound))
            .collect()
    }

    fn local_observation(&self, agent: usize, x: &BlockVector, noise: &[f64]) -> f64 {
        self.incident[agent]
            .iter()
            .map(|&e| norm_sq(&self.residual(e, x, Some(noise))))
            .sum()
    }

    fn global_observation(&self, x: &BlockVector, noise: &[f64]) -> f64 {
        (0..self.edges.len())
            .map(|e| norm_sq(&self.residual(e, x, Some(noise))))
            .sum()
    }

    /// `(|d| + 3 sigma)^2 <= (1 + 9 sigma^2 / var) (d^2 + var)` per component,
    /// with `var` the truncated noise variance.
    fn observation_bound(&self) -> f64 {
        if self.noise_std == 0.0 {
            1.0
        } else {
            let b = self.noise_bound * self.noise_std;
            1.0 + b * b / self.noise_variance()
        }
    }

    fn exact_value(&self, x: &BlockVector) -> Option<f64> {
        Some((0..self.edges.len()).map(|e| self.edge_value(e, x)).sum())
    }

    fn exact_local_value(&self, agent: usize, x: &BlockVector) -> Option<f64> {
        Some(self.incident[agent].iter().map(|&e| self.edge_value(e, x)).sum())
    }

    fn exact_gradient(&self, x: &BlockVector) -> Option<BlockVector> {
        let mut g = BlockVector::zeros(&self.block_dims()).ok()?;
        for e in 0..self.edges.len() {
            let (a, b) = self.edges[e];
            if a == b {
                continue;
            }
            let res = self.residual(e, x, None);
            for c in 0..self.dim {
                g.block_mut(a)[c] += 2.0 * res[c];
                g.block_mut(b)[c] -= 2.0 * res[c];
            }
        }
        Some(g)
    }
}

/// Noiseless quadratic `f(x) = x'Ax/2 + b'x + c` observed in full by every
/// agent (complete interaction graph).
#[derive(Debug, Clone)]
pub struct Quadratic {
    dims: Vec<usize>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    c: f64,
    graph: DirectedGraph,
}

impl Quadratic {
    pub fn new(dims: Vec<usize>, a: DMatrix<f64>, b: DVector<f64>, c: f64) -> Result<Self> {
        let q: usize = dims.iter().sum();
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::arg("need at least one block of positive dimension"));
        }
        if a.nrows() != q || a.ncols() != q || b.len() != q {
            return Err(Error::arg(format!("quadratic data must have dimension {q}")));
        }
        let graph = DirectedGraph::complete(dims.len())?;
        Ok(Self { dims, a, b, c, graph })
    }

    /// `||x||^2` on a single block.
    pub fn squared_norm(dim: usize) -> Result<Self> {
        Self::new(
            vec![dim],
            DMatrix::identity(dim, dim) * 2.0,
            DVector::zeros(dim),
            0.0,
        )
    }

    /// Gradient Lipschitz constant (spectral norm of `A`).
    pub fn smoothness(&self) -> f64 {
        let s = (&self.a + self.a.transpose()) * 0.5;
        s.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    fn value(&self, x: &BlockVector) -> f64 {
        let v = DVector::from_column_slice(x.as_slice());
        0.5 * v.dot(&(&self.a * &v)) + self.b.dot(&v) + self.c
    }
}

impl NetworkedObjective for Quadratic {
    fn block_dims(&self) -> Vec<usize> {
        self.dims.clone()
    }

    fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    fn sample_noise(&self, _rng: &mut StreamRng) -> Vec<f64> {
        Vec::new()
    }

    fn local_observation(&self, _agent: usize, x: &BlockVector, _noise: &[f64]) -> f64 {
        self.value(x)
    }

    fn global_observation(&self, x: &BlockVector, _noise: &[f64]) -> f64 {
        self.value(x)
    }

    fn exact_value(&self, x: &BlockVector) -> Option<f64> {
        Some(self.value(x))
    }

    fn exact_local_value(&self, _agent: usize, x: &BlockVector) -> Option<f64> {
        Some(self.value(x))
    }

    fn exact_gradient(&self, x: &BlockVector) -> Option<BlockVector> {
        let v = DVector::from_column_slice(x.as_slice());
        let sym = (&self.a + self.a.transpose()) * 0.5;
        let g = sym * v + &self.b;
        BlockVector::from_flat(&self.dims, g.as_slice().to_vec()).ok()
    }
}

/// Identically zero observations.
#[derive(Debug, Clone)]
pub struct ZeroObjective {
    dims: Vec<usize>,
    graph: DirectedGraph,
}

impl ZeroObjective {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let graph = DirectedGraph::new(dims.len(), true)?;
        Ok(Self { dims, graph })
    }
}

impl NetworkedObjective for ZeroObjective {
    fn block_dims(&self) -> Vec<usize> {
        self.dims.clone()
    }

    fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    fn sample_noise(&self, _rng: &mut StreamRng) -> Vec<f64> {
        Vec::new()
    }

    fn local_observation(&self, _agent: usize, _x: &BlockVector, _noise: &[f64]) -> f64 {
        0.0
    }

    fn global_observation(&self, _x: &BlockVector, _noise: &[f64]) -> f64 {
        0.0
    }

    fn exact_value(&self, _x: &BlockVector) -> Option<f64> {
        Some(0.0)
    }

    fn exact_local_value(&self, _agent: usize, _x: &BlockVector) -> Option<f64> {
        Some(0.0)
    }

    fn exact_gradient(&self, _x: &BlockVector) -> Option<BlockVector> {
        BlockVector::zeros(&self.dims).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    fn fd_gradient(obj: &dyn NetworkedObjective, x: &BlockVector) -> Vec<f64> {
        let h = 1e-6;
        (0..x.dim())
            .map(|j| {
                let mut p = x.clone();
                let mut m = x.clone();
                p.as_mut_slice()[j] += h;
                m.as_mut_slice()[j] -= h;
                (obj.exact_value(&p).unwrap() - obj.exact_value(&m).unwrap()) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn chain_local_costs_touch_only_neighbors() {
        let obj = PairwiseDisplacement::chain(4, 0.1).unwrap();
        let mut rng = stream(3, Purpose::Probe, 0, 0);
        for _ in 0..50 {
            let noise = obj.sample_noise(&mut rng);
            let x = BlockVector::from_flat(
                &[1; 4],
                (0..4).map(|_| truncated_normal(&mut rng, 2.0, 3.0)).collect(),
            )
            .unwrap();
            for i in 0..4 {
                let base = obj.local_observation(i, &x, &noise);
                assert!(base >= 0.0);
                let nbrs = obj.graph().in_neighbors(i);
                for j in (0..4).filter(|j| !nbrs.contains(j)) {
                    let mut y = x.clone();
                    y.block_mut(j)[0] += 7.5;
                    assert_eq!(obj.local_observation(i, &y, &noise), base);
                }
            }
        }
    }

    #[test]
    fn chain_first_agent_sees_first_edge_only() {
        let obj = PairwiseDisplacement::chain(4, 0.0).unwrap();
        assert_eq!(obj.graph().in_neighbors(0), vec![0, 1]);
        let x = BlockVector::from_flat(&[1; 4], vec![0.0, 0.5, 2.0, 0.0]).unwrap();
        // h_1 = (x1 - x2 - 1)^2 = 2.25
        assert!((obj.local_observation(0, &x, &[0.0; 3]) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn gradients_match_finite_differences_and_local_costs() {
        let obj = PairwiseDisplacement::new(
            3,
            2,
            vec![(0, 1), (1, 2), (0, 2)],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.5]],
            0.2,
        )
        .unwrap();
        let x = BlockVector::from_flat(&[2; 3], vec![0.3, -0.2, 1.0, 0.4, -0.7, 0.9]).unwrap();
        let g = obj.exact_gradient(&x).unwrap();
        let fd = fd_gradient(&obj, &x);
        for (a, b) in g.as_slice().iter().zip(&fd) {
            assert!((a - b).abs() < 1e-6);
        }
        // grad of f_i wrt x_i equals grad of f wrt x_i
        let h = 1e-6;
        for i in 0..3 {
            for c in 0..2 {
                let mut p = x.clone();
                let mut m = x.clone();
                p.block_mut(i)[c] += h;
                m.block_mut(i)[c] -= h;
                let d = (obj.exact_local_value(i, &p).unwrap() - obj.exact_local_value(i, &m).unwrap())
                    / (2.0 * h);
                assert!((d - g.block(i)[c]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn observation_bound_holds_on_samples() {
        let obj = PairwiseDisplacement::chain(4, 0.5).unwrap();
        let c = obj.observation_bound();
        let mut rng = stream(4, Purpose::Probe, 0, 0);
        for _ in 0..2000 {
            let x = BlockVector::from_flat(
                &[1; 4],
                (0..4).map(|_| truncated_normal(&mut rng, 1.5, 3.0)).collect(),
            )
            .unwrap();
            let noise = obj.sample_noise(&mut rng);
            for i in 0..4 {
                let f_i = obj.exact_local_value(i, &x).unwrap();
                assert!(obj.local_observation(i, &x, &noise) <= c * f_i + 1e-12);
            }
        }
    }

    #[test]
    fn chain_smoothness() {
        let obj = PairwiseDisplacement::chain(4, 0.0).unwrap();
        // 2 * (2 + sqrt 2)
        assert!((obj.smoothness() - 2.0 * (2.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn quadratic_oracles() {
        let q = Quadratic::squared_norm(2).unwrap();
        let x = BlockVector::from_flat(&[2], vec![1.0, 0.0]).unwrap();
        assert_eq!(q.exact_value(&x), Some(1.0));
        assert_eq!(q.exact_gradient(&x).unwrap().as_slice(), &[2.0, 0.0]);
        assert!((q.smoothness() - 2.0).abs() < 1e-12);
    }
}

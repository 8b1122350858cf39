use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netgraph::DirectedGraph;
use crate::zoo::BlockVector;

/// Sparsity pattern of distributed gains: agent `i` may feed back the states
/// of its sensing in-neighbors (itself included).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GainPattern {
    pub n: usize,
    pub m: usize,
    /// Sorted sensing in-neighbors of each agent.
    pub neighbors: Vec<Vec<usize>>,
}

impl GainPattern {
    pub fn from_sensing(sensing: &DirectedGraph, n: usize, m: usize) -> Self {
        let neighbors = (0..sensing.n_vertices())
            .map(|i| {
                let mut v = sensing.in_neighbors(i);
                if !v.contains(&i) {
                    v.push(i);
                    v.sort_unstable();
                }
                v
            })
            .collect();
        Self { n, m, neighbors }
    }

    pub fn n_agents(&self) -> usize {
        self.neighbors.len()
    }

    /// Vectorized dimension of each agent's block, `m n |N_i|`.
    pub fn block_dims(&self) -> Vec<usize> {
        self.neighbors.iter().map(|nb| self.m * self.n * nb.len()).collect()
    }

    pub fn allows(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    fn dense_shape(&self) -> (usize, usize) {
        (self.m * self.n_agents(), self.n * self.n_agents())
    }

    /// Zeroes every block outside the pattern.
    pub fn project(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(k.nrows(), k.ncols());
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                let blk = k.view((i * self.m, j * self.n), (self.m, self.n));
                out.view_mut((i * self.m, j * self.n), (self.m, self.n)).copy_from(&blk);
            }
        }
        out
    }

    /// Column-major vectorization of each compact block.
    pub fn vectorize(&self, k: &DMatrix<f64>) -> Result<BlockVector> {
        if k.shape() != self.dense_shape() {
            return Err(Error::arg(format!(
                "gain has shape {:?}, pattern expects {:?}",
                k.shape(),
                self.dense_shape()
            )));
        }
        let mut x = BlockVector::zeros(&self.block_dims())?;
        for (i, nb) in self.neighbors.iter().enumerate() {
            let blk = x.block_mut(i);
            let mut p = 0;
            for &j in nb {
                for c in 0..self.n {
                    for r in 0..self.m {
                        blk[p] = k[(i * self.m + r, j * self.n + c)];
                        p += 1;
                    }
                }
            }
        }
        Ok(x)
    }

    /// Inverse of [`vectorize`](Self::vectorize): the dense gain on the pattern.
    pub fn unvectorize(&self, x: &BlockVector) -> Result<DMatrix<f64>> {
        if x.dims() != self.block_dims() {
            return Err(Error::arg("vectorized gain does not match the pattern"));
        }
        let (rows, cols) = self.dense_shape();
        let mut k = DMatrix::zeros(rows, cols);
        for (i, nb) in self.neighbors.iter().enumerate() {
            let blk = x.block(i);
            let mut p = 0;
            for &j in nb {
                for c in 0..self.n {
                    for r in 0..self.m {
                        k[(i * self.m + r, j * self.n + c)] = blk[p];
                        p += 1;
                    }
                }
            }
        }
        Ok(k)
    }

    /// Compact block `K~_i` (`m x n|N_i|`).
    pub fn compact_block(&self, k: &DMatrix<f64>, i: usize) -> DMatrix<f64> {
        let nb = &self.neighbors[i];
        let mut out = DMatrix::zeros(self.m, self.n * nb.len());
        for (s, &j) in nb.iter().enumerate() {
            out.view_mut((0, s * self.n), (self.m, self.n))
                .copy_from(&k.view((i * self.m, j * self.n), (self.m, self.n)));
        }
        out
    }

    /// Largest absolute entry outside the pattern.
    pub fn off_pattern_max(&self, k: &DMatrix<f64>) -> f64 {
        (k - self.project(k)).amax()
    }
}

/// Distributed gain: a pattern and the dense matrix it constrains.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedGain {
    pattern: GainPattern,
    k: DMatrix<f64>,
}

impl DistributedGain {
    /// Errors if `k` has nonzero entries outside the pattern.
    pub fn new(pattern: GainPattern, k: DMatrix<f64>) -> Result<Self> {
        pattern.vectorize(&k)?;
        let off = pattern.off_pattern_max(&k);
        if off != 0.0 {
            return Err(Error::arg(format!(
                "gain has entries outside the sensing pattern (largest {off:e})"
            )));
        }
        Ok(Self { pattern, k })
    }

    pub fn from_vector(pattern: GainPattern, x: &BlockVector) -> Result<Self> {
        let k = pattern.unvectorize(x)?;
        Ok(Self { pattern, k })
    }

    pub fn pattern(&self) -> &GainPattern {
        &self.pattern
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn to_vector(&self) -> BlockVector {
        self.pattern.vectorize(&self.k).expect("shape checked at construction")
    }

    pub fn compact_blocks(&self) -> Vec<DMatrix<f64>> {
        (0..self.pattern.n_agents())
            .map(|i| self.pattern.compact_block(&self.k, i))
            .collect()
    }
}

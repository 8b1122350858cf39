//! JSON formats for systems and gain checkpoints. Matrices are stored
//! row-major with explicit dimensions; agent ids are 1-based.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gain::{DistributedGain, GainPattern};
use super::system::{InitialState, MasLqrSystem};
use crate::error::{Error, Result};
use crate::netgraph::DirectedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Config(format!(
                "matrix declares {}x{} but holds {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SystemFile {
    pub n: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub n_agents: usize,
    pub gamma: f64,
    #[serde(rename = "A")]
    pub a: Vec<MatrixJson>,
    #[serde(rename = "B")]
    pub b: Vec<MatrixJson>,
    #[serde(rename = "G")]
    pub g: MatrixJson,
    #[serde(rename = "Qtilde")]
    pub q_tilde: MatrixJson,
    #[serde(rename = "R")]
    pub r: Vec<MatrixJson>,
    /// `[from, to]`: agent `to` feeds back the state of `from`.
    pub sensing_edges: Vec<[usize; 2]>,
    #[serde(default)]
    pub leaders: Vec<usize>,
    #[serde(default)]
    pub initial_state: InitialState,
}

impl SystemFile {
    pub fn from_system(sys: &MasLqrSystem) -> Self {
        let sensing_edges = sys
            .sensing()
            .edges()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| [a + 1, b + 1])
            .collect();
        Self {
            n: sys.state_dim(),
            m: sys.input_dim(),
            n_agents: sys.n_agents(),
            gamma: sys.gamma(),
            a: sys.a_blocks().iter().map(MatrixJson::from_matrix).collect(),
            b: sys.b_blocks().iter().map(MatrixJson::from_matrix).collect(),
            g: MatrixJson::from_matrix(sys.coupling()),
            q_tilde: MatrixJson::from_matrix(sys.q_tilde()),
            r: sys.r_blocks().iter().map(MatrixJson::from_matrix).collect(),
            sensing_edges,
            leaders: sys.leaders().iter().map(|l| l + 1).collect(),
            initial_state: *sys.initial_state(),
        }
    }

    pub fn to_system(&self) -> Result<MasLqrSystem> {
        let mats = |v: &[MatrixJson]| v.iter().map(MatrixJson::to_matrix).collect::<Result<Vec<_>>>();
        if self.a.len() != self.n_agents || self.b.len() != self.n_agents || self.r.len() != self.n_agents {
            return Err(Error::Config(format!("expected {} A, B and R blocks", self.n_agents)));
        }
        let a = mats(&self.a)?;
        if a.iter().any(|m| m.shape() != (self.n, self.n)) {
            return Err(Error::Config(format!("every A block must be {0}x{0}", self.n)));
        }
        let b = mats(&self.b)?;
        if b.iter().any(|m| m.shape() != (self.n, self.m)) {
            return Err(Error::Config(format!("every B block must be {}x{}", self.n, self.m)));
        }
        let mut edges = Vec::with_capacity(self.sensing_edges.len());
        for &[from, to] in &self.sensing_edges {
            if from == 0 || to == 0 || from > self.n_agents || to > self.n_agents {
                return Err(Error::Config(format!("sensing edge ({from}, {to}) is out of range")));
            }
            edges.push((from - 1, to - 1));
        }
        let sensing = DirectedGraph::from_edges(self.n_agents, true, &edges)?;
        if self.leaders.iter().any(|&l| l == 0 || l > self.n_agents) {
            return Err(Error::Config("leader id out of range".into()));
        }
        MasLqrSystem::new(
            a,
            b,
            self.gamma,
            self.g.to_matrix()?,
            self.q_tilde.to_matrix()?,
            mats(&self.r)?,
            sensing,
            self.leaders.iter().map(|l| l - 1).collect(),
            self.initial_state,
        )
        .map_err(|e| Error::Config(e.to_string()))
    }
}

pub fn read_system(path: &Path) -> Result<MasLqrSystem> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SystemFile = serde_json::from_str(&text)?;
    file.to_system()
}

pub fn write_system(path: &Path, sys: &MasLqrSystem) -> Result<()> {
    let text = serde_json::to_string_pretty(&SystemFile::from_system(sys))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCheckpoint {
    pub n: usize,
    pub m: usize,
    /// 1-based sensing in-neighbors of each agent.
    pub pattern: Vec<Vec<usize>>,
    /// Compact block of each agent, `m x n|N_i|`.
    pub blocks: Vec<MatrixJson>,
}

impl GainCheckpoint {
    pub fn from_gain(k: &DistributedGain) -> Self {
        let p = k.pattern();
        Self {
            n: p.n,
            m: p.m,
            pattern: p.neighbors.iter().map(|nb| nb.iter().map(|j| j + 1).collect()).collect(),
            blocks: k.compact_blocks().iter().map(MatrixJson::from_matrix).collect(),
        }
    }

    pub fn to_gain(&self) -> Result<DistributedGain> {
        let n_agents = self.pattern.len();
        if self.blocks.len() != n_agents {
            return Err(Error::Config("one compact block per agent is required".into()));
        }
        let mut neighbors = Vec::with_capacity(n_agents);
        for nb in &self.pattern {
            if nb.iter().any(|&j| j == 0 || j > n_agents) {
                return Err(Error::Config("pattern entry out of range".into()));
            }
            let mut v: Vec<usize> = nb.iter().map(|j| j - 1).collect();
            v.sort_unstable();
            v.dedup();
            neighbors.push(v);
        }
        let pattern = GainPattern {
            n: self.n,
            m: self.m,
            neighbors,
        };
        let mut k = DMatrix::zeros(self.m * n_agents, self.n * n_agents);
        for (i, blk) in self.blocks.iter().enumerate() {
            let b = blk.to_matrix()?;
            let nb = &pattern.neighbors[i];
            if b.shape() != (self.m, self.n * nb.len()) {
                return Err(Error::Config(format!("compact block of agent {} has the wrong shape", i + 1)));
            }
            for (s, &j) in nb.iter().enumerate() {
                k.view_mut((i * self.m, j * self.n), (self.m, self.n))
                    .copy_from(&b.view((0, s * self.n), (self.m, self.n)));
            }
        }
        DistributedGain::new(pattern, k)
    }
}

pub fn read_gain(path: &Path) -> Result<DistributedGain> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: GainCheckpoint = serde_json::from_str(&text)?;
    ck.to_gain()
}

pub fn write_gain(path: &Path, k: &DistributedGain) -> Result<()> {
    let text = serde_json::to_string_pretty(&GainCheckpoint::from_gain(k))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrices_are_row_major() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let j = MatrixJson::from_matrix(&m);
        assert_eq!(j.data, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(j.to_matrix().unwrap(), m);
        let bad = MatrixJson { rows: 2, cols: 2, data: vec![1.0] };
        assert!(bad.to_matrix().is_err());
    }
}

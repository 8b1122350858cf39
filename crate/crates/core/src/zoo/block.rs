use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Concatenation of per-agent decision blocks `x = (x_1, ..., x_N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockVector {
    data: Vec<f64>,
    offsets: Vec<usize>,
}

impl BlockVector {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::arg("every block needs a positive dimension"));
        }
        let mut offsets = Vec::with_capacity(dims.len() + 1);
        offsets.push(0);
        for &d in dims {
            offsets.push(offsets.last().unwrap() + d);
        }
        Ok(Self {
            data: vec![0.0; *offsets.last().unwrap()],
            offsets,
        })
    }

    pub fn from_blocks(blocks: &[Vec<f64>]) -> Result<Self> {
        let dims: Vec<usize> = blocks.iter().map(Vec::len).collect();
        let mut x = Self::zeros(&dims)?;
        for (i, b) in blocks.iter().enumerate() {
            x.block_mut(i).copy_from_slice(b);
        }
        Ok(x)
    }

    pub fn from_flat(dims: &[usize], data: Vec<f64>) -> Result<Self> {
        let mut x = Self::zeros(dims)?;
        if data.len() != x.data.len() {
            return Err(Error::arg(format!(
                "flat vector has length {} but block dims sum to {}",
                data.len(),
                x.data.len()
            )));
        }
        x.data = data;
        Ok(x)
    }

    pub fn n_blocks(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn block_dim(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn dims(&self) -> Vec<usize> {
        (0..self.n_blocks()).map(|i| self.block_dim(i)).collect()
    }

    pub fn block(&self, i: usize) -> &[f64] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn set_block(&mut self, i: usize, values: &[f64]) -> Result<()> {
        if values.len() != self.block_dim(i) {
            return Err(Error::arg(format!(
                "block {} has dimension {} but {} values were given",
                i + 1,
                self.block_dim(i),
                values.len()
            )));
        }
        self.block_mut(i).copy_from_slice(values);
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn block_norm(&self, i: usize) -> f64 {
        norm(self.block(i))
    }

    pub fn same_shape(&self, other: &BlockVector) -> bool {
        self.offsets == other.offsets
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

use crate::error::{Error, Result};

/// Channel offsets within a cell vector: `[p, v, x, y, z, a1, a2, (a3)]`.
pub mod channel {
    pub const PROB: usize = 0;
    pub const VIS: usize = 1;
    pub const X: usize = 2;
    pub const Y: usize = 3;
    pub const Z: usize = 4;
    pub const A1: usize = 5;
    pub const A2: usize = 6;
    pub const A3: usize = 7;
}

/// `S x S x C` cell grid, row-major over cells with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    size: usize,
    channels: usize,
    data: Vec<f64>,
}

impl GridTensor {
    pub fn zeros(size: usize, channels: usize) -> Self {
        Self {
            size,
            channels,
            data: vec![0.0; size * size * channels],
        }
    }

    pub fn filled(size: usize, channels: usize, value: f64) -> Self {
        Self {
            size,
            channels,
            data: vec![value; size * size * channels],
        }
    }

    pub fn from_vec(size: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != size * size * channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{size}x{size}x{channels} = {}", size * size * channels),
                found: data.len().to_string(),
            });
        }
        Ok(Self {
            size,
            channels,
            data,
        })
    }

    /// Cells per side.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn cell_count(&self) -> usize {
        self.size * self.size
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f64] {
        let start = (i * self.size + j) * self.channels;
        &self.data[start..start + self.channels]
    }

    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f64] {
        let start = (i * self.size + j) * self.channels;
        &mut self.data[start..start + self.channels]
    }

    /// Cell vector by flat row-major index.
    pub fn cell_at(&self, index: usize) -> &[f64] {
        &self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn cell_at_mut(&mut self, index: usize) -> &mut [f64] {
        &mut self.data[index * self.channels..(index + 1) * self.channels]
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f64 {
        self.data[(i * self.size + j) * self.channels + c]
    }

    pub fn set(&mut self, i: usize, j: usize, c: usize, value: f64) {
        self.data[(i * self.size + j) * self.channels + c] = value;
    }

    pub fn ensure_same_shape(&self, other: &GridTensor) -> Result<()> {
        if self.size != other.size || self.channels != other.channels {
            return Err(Error::ShapeMismatch {
                expected: format!("{0}x{0}x{1}", self.size, self.channels),
                found: format!("{0}x{0}x{1}", other.size, other.channels),
            });
        }
        Ok(())
    }
}

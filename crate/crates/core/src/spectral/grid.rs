use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Periodic box [0, L)ⁿ with M points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub m: usize,
    pub length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, m: usize, length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {m}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {length}")));
        }
        Ok(Self { dim, m, length })
    }

    pub fn npoints(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }

    /// Lⁿ.
    pub fn measure(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Quadrature weight hⁿ.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Per-axis indices of flat index `i` (axis 0 varies fastest).
    pub fn index(&self, i: usize) -> [usize; 2] {
        if self.dim == 1 {
            [i, 0]
        } else {
            [i % self.m, i / self.m]
        }
    }

    pub fn coords(&self, i: usize) -> [f64; 2] {
        let h = self.spacing();
        let [a, b] = self.index(i);
        [a as f64 * h, b as f64 * h]
    }

    /// Signed frequency index of position `j` on one axis, in [−M/2, M/2).
    pub fn signed(&self, j: usize) -> i64 {
        let m = self.m as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn base_wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.length
    }
}

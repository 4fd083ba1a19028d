//! Uniform grids on the fundamental cell `[-1/2, 1/2)^d` and sampled functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid with `n_per_axis` points per axis.
///
/// Point `n ∈ {0,…,N−1}^d` sits at `k_n = (n + offset)/N − 1/2` per component.
/// Flat indices are row-major: the last axis varies fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dim: usize,
    pub n_per_axis: usize,
    pub offset: f64,
}

impl GridSpec {
    pub const DEFAULT_OFFSET: f64 = 0.5;

    pub fn new(dim: usize, n_per_axis: usize, offset: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("grid dimension must be >= 1".into()));
        }
        if n_per_axis < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points per axis, got {n_per_axis}"
            )));
        }
        if !(0.0..1.0).contains(&offset) {
            return Err(Error::InvalidArgument(format!(
                "grid offset {offset} not in [0, 1)"
            )));
        }
        let total = (n_per_axis as u128).checked_pow(dim as u32);
        if total.map_or(true, |t| t > usize::MAX as u128 / 8) {
            return Err(Error::InvalidArgument(format!(
                "grid {n_per_axis}^{dim} is too large to index"
            )));
        }
        Ok(Self {
            dim,
            n_per_axis,
            offset,
        })
    }

    /// Grid with the default half-cell offset, which keeps `k = 0` off the grid.
    pub fn centered(dim: usize, n_per_axis: usize) -> Result<Self> {
        Self::new(dim, n_per_axis, Self::DEFAULT_OFFSET)
    }

    pub fn len(&self) -> usize {
        self.n_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `1/N`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.n_per_axis as f64
    }

    /// Quadrature weight of a single point, `N^{-d}`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, n: usize) -> f64 {
        (n as f64 + self.offset) / self.n_per_axis as f64 - 0.5
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            out[axis] = flat % self.n_per_axis;
            flat /= self.n_per_axis;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &n| acc * self.n_per_axis + n)
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .into_iter()
            .map(|n| self.coordinate(n))
            .collect()
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }
}

/// Real samples of a function on every point of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::GridMismatch(format!(
                "expected {} values for a {}^{} grid, got {}",
                spec.len(),
                spec.n_per_axis,
                spec.dim,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid function value at index {i} is not finite"
            )));
        }
        Ok(Self { spec, values })
    }

    pub fn from_fn(spec: GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = spec.points().map(|k| f(&k)).collect();
        Self::new(spec, values)
    }

    pub fn constant(spec: GridSpec, value: f64) -> Result<Self> {
        Self::new(spec, vec![value; spec.len()])
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Pointwise `f(value)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn ensure_same_grid(&self, other: &GridSpec, what: &str) -> Result<()> {
        if &self.spec != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.spec, other
            )));
        }
        Ok(())
    }
}

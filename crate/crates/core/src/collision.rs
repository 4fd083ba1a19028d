//! Discrete four-phonon collisions and the linear constraints they impose.
//!
//! Momentum conservation is taken modulo the reciprocal lattice, which on a
//! uniform grid reduces to exact integer arithmetic on the per-axis indices.
//! Energy conservation is imposed up to an absolute slack `epsilon_e`.

use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dispersion::FourierDispersion;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

/// Default cap on the number of enumerated collisions.
pub const DEFAULT_MAX_COLLISIONS: usize = 100_000_000;

/// Energy slack, in units of `max|∇ω| / N`, used for pair collisions by default.
pub const PAIR_SLACK_CELLS: f64 = 0.1;

/// Energy slack, in units of `max|∇ω| / N`, used for 3↔1 processes by default.
pub const REDUCTION_SLACK_CELLS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerationOptions {
    pub epsilon_e: f64,
    pub max_collisions: usize,
}

impl EnumerationOptions {
    pub fn new(epsilon_e: f64) -> Self {
        Self {
            epsilon_e,
            max_collisions: DEFAULT_MAX_COLLISIONS,
        }
    }

    fn validate(&self, allow_zero: bool) -> Result<()> {
        let ok = self.epsilon_e.is_finite()
            && (self.epsilon_e > 0.0 || (allow_zero && self.epsilon_e == 0.0));
        if !ok {
            return Err(Error::InvalidArgument(format!(
                "energy tolerance must be positive, got {}",
                self.epsilon_e
            )));
        }
        Ok(())
    }
}

/// `PAIR_SLACK_CELLS · max|∇ω|_∞ / N`, the default energy slack for pair collisions.
pub fn default_epsilon_e(disp: &FourierDispersion, grid: &GridSpec, eps0: f64) -> Result<f64> {
    Ok(PAIR_SLACK_CELLS * disp.max_gradient(grid, eps0)? * grid.spacing())
}

/// One grid cell of energy slack, `max|∇ω|_∞ / N`, used for 3↔1 processes.
pub fn default_reduction_epsilon_e(
    disp: &FourierDispersion,
    grid: &GridSpec,
    eps0: f64,
) -> Result<f64> {
    Ok(REDUCTION_SLACK_CELLS * disp.max_gradient(grid, eps0)? * grid.spacing())
}

/// A pair collision `(k1, k2) → (k3, k4)` in canonical form:
/// `i1 ≤ i2`, `i3 ≤ i4`, `(i1, i2) < (i3, i4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionQuadruple {
    pub i1: usize,
    pub i2: usize,
    pub i3: usize,
    pub i4: usize,
    /// `ω1 + ω2 − ω3 − ω4`.
    pub energy_residual: f64,
}

impl CollisionQuadruple {
    pub fn indices(&self) -> [usize; 4] {
        [self.i1, self.i2, self.i3, self.i4]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadrupleSet {
    pub grid: GridSpec,
    pub epsilon_e: f64,
    pub quads: Vec<CollisionQuadruple>,
}

impl QuadrupleSet {
    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }
}

/// Per-axis multi-indices of every grid point, flattened.
fn index_table(grid: &GridSpec) -> Vec<usize> {
    (0..grid.len()).flat_map(|i| grid.multi_index(i)).collect()
}

pub fn enumerate_quadruples(
    disp: &FourierDispersion,
    grid: &GridSpec,
    opts: &EnumerationOptions,
) -> Result<QuadrupleSet> {
    let omega = disp.sample(grid)?;
    enumerate_quadruples_from_samples(&omega, opts)
}

/// Enumerates pair collisions using only the sampled dispersion.
///
/// Work is split over `i1`; partial lists are concatenated in `i1` order so the
/// result does not depend on the thread count.
pub fn enumerate_quadruples_from_samples(
    omega: &GridFunction,
    opts: &EnumerationOptions,
) -> Result<QuadrupleSet> {
    opts.validate(true)?;
    let grid = *omega.spec();
    let w = omega.values();
    let p = grid.len();
    let d = grid.dim;
    let n = grid.n_per_axis;
    let idx = index_table(&grid);
    let eps = opts.epsilon_e;

    let count = AtomicUsize::new(0);
    let overflow = AtomicBool::new(false);
    let chunks: Vec<Vec<CollisionQuadruple>> = (0..p)
        .into_par_iter()
        .map(|i1| {
            let mut out = Vec::new();
            if overflow.load(Ordering::Relaxed) {
                return out;
            }
            let n1 = &idx[i1 * d..(i1 + 1) * d];
            let mut n12 = vec![0usize; d];
            for i2 in i1..p {
                let n2 = &idx[i2 * d..(i2 + 1) * d];
                for a in 0..d {
                    n12[a] = n1[a] + n2[a];
                }
                let e12 = w[i1] + w[i2];
                for i3 in i1..p {
                    let n3 = &idx[i3 * d..(i3 + 1) * d];
                    let i4 = (0..d).fold(0, |acc, a| acc * n + (n12[a] + n - n3[a]) % n);
                    // canonical and non-trivial: i3 <= i4 and (i3, i4) > (i1, i2)
                    if i4 < i3 || (i3 == i1 && i4 <= i2) {
                        continue;
                    }
                    let r = e12 - w[i3] - w[i4];
                    if r.abs() <= eps {
                        out.push(CollisionQuadruple {
                            i1,
                            i2,
                            i3,
                            i4,
                            energy_residual: r,
                        });
                    }
                }
            }
            let total = count.fetch_add(out.len(), Ordering::Relaxed) + out.len();
            if total > opts.max_collisions {
                overflow.store(true, Ordering::Relaxed);
            }
            out
        })
        .collect();
    if overflow.load(Ordering::Relaxed) {
        return Err(Error::CapacityExceeded {
            cap: opts.max_collisions,
        });
    }
    let mut quads: Vec<CollisionQuadruple> = chunks.into_iter().flatten().collect();
    // already ordered by (i1, i2, i3); i4 is determined by the others
    debug_assert!(quads.windows(2).all(|q| q[0].indices() < q[1].indices()));
    quads.shrink_to_fit();
    Ok(QuadrupleSet {
        grid,
        epsilon_e: eps,
        quads,
    })
}

/// Sparse constraint matrix with one row `e_{i1} + e_{i2} − e_{i3} − e_{i4}` per collision.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    // transpose, for deterministic Mᵀy
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    t_values: Vec<f64>,
}

pub fn build_constraint_matrix(qs: &QuadrupleSet) -> ConstraintMatrix {
    let rows = qs.quads.iter().map(|q| {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4);
        for (i, s) in [(q.i1, 1.0), (q.i2, 1.0), (q.i3, -1.0), (q.i4, -1.0)] {
            match entries.iter_mut().find(|(c, _)| *c == i) {
                Some(e) => e.1 += s,
                None => entries.push((i, s)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        entries.sort_by_key(|&(c, _)| c);
        entries
    });
    ConstraintMatrix::from_rows(qs.grid.len(), rows)
}

impl ConstraintMatrix {
    pub fn from_rows(n_cols: usize, rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for row in rows {
            for (c, v) in row {
                assert!(c < n_cols, "column {c} out of range");
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let n_rows = row_ptr.len() - 1;

        let mut counts = vec![0usize; n_cols + 1];
        for &c in &col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..n_cols {
            counts[c + 1] += counts[c];
        }
        let col_ptr = counts.clone();
        let mut next = counts;
        let mut row_idx = vec![0; col_idx.len()];
        let mut t_values = vec![0.0; col_idx.len()];
        for r in 0..n_rows {
            for k in row_ptr[r]..row_ptr[r + 1] {
                let c = col_idx[k];
                row_idx[next[c]] = r;
                t_values[next[c]] = values[k];
                next[c] += 1;
            }
        }
        Self {
            n_cols,
            row_ptr,
            col_idx,
            values,
            col_ptr,
            row_idx,
            t_values,
        }
    }

    pub fn rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `(column, value)` pairs of row `r`, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// `(row, column, value)` triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `y = M x`; each output entry is an independent row sum.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.rows())
            .into_par_iter()
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `x = Mᵀ y`, accumulated column by column in ascending row order.
    pub fn tr_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows());
        (0..self.n_cols)
            .into_par_iter()
            .map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|k| self.t_values[k] * y[self.row_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// `MᵀM x`.
    pub fn gram_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        self.tr_mul_vec(&self.mul_vec(x))
    }

    /// Upper bound on `‖M‖₂²` from `‖M‖₁ ‖M‖_∞`.
    pub fn gram_norm_bound(&self) -> f64 {
        let max_row = (0..self.rows())
            .map(|r| self.row(r).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let max_col = (0..self.n_cols)
            .map(|c| {
                (self.col_ptr[c]..self.col_ptr[c + 1])
                    .map(|k| self.t_values[k].abs())
                    .sum()
            })
            .fold(0.0, f64::max);
        max_row * max_col
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.rows(), self.n_cols);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max_abs: f64,
    pub mean_abs: f64,
    pub rms: f64,
    pub count: usize,
    /// Set when there were no collisions to evaluate; all statistics are then zero.
    pub empty: bool,
}

/// Statistics of `ψ1 + ψ2 − ψ3 − ψ4` over every collision in the set.
pub fn residual_stats(psi: &GridFunction, qs: &QuadrupleSet) -> Result<ResidualStats> {
    psi.ensure_same_grid(&qs.grid, "candidate vs collision set")?;
    let v = psi.values();
    let residuals = qs
        .quads
        .iter()
        .map(|q| v[q.i1] + v[q.i2] - v[q.i3] - v[q.i4]);
    Ok(summarize(residuals, qs.len()))
}

fn summarize(residuals: impl Iterator<Item = f64>, count: usize) -> ResidualStats {
    if count == 0 {
        return ResidualStats {
            max_abs: 0.0,
            mean_abs: 0.0,
            rms: 0.0,
            count: 0,
            empty: true,
        };
    }
    let (mut max_abs, mut sum_abs, mut sum_sq) = (0.0f64, 0.0, 0.0);
    for r in residuals {
        max_abs = max_abs.max(r.abs());
        sum_abs += r.abs();
        sum_sq += r * r;
    }
    let c = count as f64;
    ResidualStats {
        max_abs,
        mean_abs: sum_abs / c,
        rms: (sum_sq / c).sqrt(),
        count,
        empty: false,
    }
}

/// A 3↔1 process `k1 + k2 + k3 = k4` (mod `ℤ^d`) with `i1 ≤ i2 ≤ i3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionTriple {
    pub i1: usize,
    pub i2: usize,
    pub i3: usize,
    pub i4: usize,
    /// `ω1 + ω2 + ω3 − ω4`.
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripleSet {
    pub grid: GridSpec,
    pub epsilon_e: f64,
    pub triples: Vec<CollisionTriple>,
}

impl TripleSet {
    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Index shift `s` with `n4 = n1 + n2 + n3 + s (mod N)`. Three offsets on the
/// left against one on the right only close on the grid when `2·offset` is an integer.
pub fn triple_index_shift(grid: &GridSpec) -> Result<usize> {
    let two_o = 2.0 * grid.offset;
    if (two_o - two_o.round()).abs() > 1e-12 {
        return Err(Error::GridMismatch(format!(
            "3↔1 momentum closure needs grid offset 0 or 1/2, got {}",
            grid.offset
        )));
    }
    Ok(two_o.round() as usize % grid.n_per_axis)
}

pub fn enumerate_3to1(
    disp: &FourierDispersion,
    grid: &GridSpec,
    opts: &EnumerationOptions,
) -> Result<TripleSet> {
    let omega = disp.sample(grid)?;
    enumerate_3to1_from_samples(&omega, opts)
}

pub fn enumerate_3to1_from_samples(
    omega: &GridFunction,
    opts: &EnumerationOptions,
) -> Result<TripleSet> {
    opts.validate(true)?;
    let grid = *omega.spec();
    let shift = triple_index_shift(&grid)?;
    let w = omega.values();
    let p = grid.len();
    let d = grid.dim;
    let n = grid.n_per_axis;
    let idx = index_table(&grid);
    let eps = opts.epsilon_e;

    let count = AtomicUsize::new(0);
    let overflow = AtomicBool::new(false);
    let chunks: Vec<Vec<CollisionTriple>> = (0..p)
        .into_par_iter()
        .map(|i1| {
            let mut out = Vec::new();
            if overflow.load(Ordering::Relaxed) {
                return out;
            }
            let n1 = &idx[i1 * d..(i1 + 1) * d];
            for i2 in i1..p {
                let n2 = &idx[i2 * d..(i2 + 1) * d];
                for i3 in i2..p {
                    let n3 = &idx[i3 * d..(i3 + 1) * d];
                    let i4 = (0..d).fold(0, |acc, a| acc * n + (n1[a] + n2[a] + n3[a] + shift) % n);
                    let r = w[i1] + w[i2] + w[i3] - w[i4];
                    if r.abs() <= eps {
                        out.push(CollisionTriple {
                            i1,
                            i2,
                            i3,
                            i4,
                            energy_residual: r,
                        });
                    }
                }
            }
            let total = count.fetch_add(out.len(), Ordering::Relaxed) + out.len();
            if total > opts.max_collisions {
                overflow.store(true, Ordering::Relaxed);
            }
            out
        })
        .collect();
    if overflow.load(Ordering::Relaxed) {
        return Err(Error::CapacityExceeded {
            cap: opts.max_collisions,
        });
    }
    Ok(TripleSet {
        grid,
        epsilon_e: eps,
        triples: chunks.into_iter().flatten().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionStats {
    /// Mean of `ψ1 + ψ2 + ψ3 − ψ4`; equals `a·(mean energy residual) + 2c` for `ψ = aω + c`.
    pub mean_residual: f64,
    pub max_abs_residual: f64,
    pub count: usize,
    /// No 3↔1 processes were available, so nothing can be inferred.
    pub empty: bool,
}

impl ReductionStats {
    /// Estimate of the constant part `c` of an affine candidate.
    pub fn inferred_c(&self) -> f64 {
        self.mean_residual / 2.0
    }
}

pub fn check_nonconserving_reduction(psi: &GridFunction, ts: &TripleSet) -> Result<ReductionStats> {
    psi.ensure_same_grid(&ts.grid, "candidate vs 3↔1 set")?;
    if ts.is_empty() {
        return Ok(ReductionStats {
            mean_residual: 0.0,
            max_abs_residual: 0.0,
            count: 0,
            empty: true,
        });
    }
    let v = psi.values();
    let (mut sum, mut max_abs) = (0.0, 0.0f64);
    for t in &ts.triples {
        let r = v[t.i1] + v[t.i2] + v[t.i3] - v[t.i4];
        sum += r;
        max_abs = max_abs.max(r.abs());
    }
    Ok(ReductionStats {
        mean_residual: sum / ts.len() as f64,
        max_abs_residual: max_abs,
        count: ts.len(),
        empty: false,
    })
}

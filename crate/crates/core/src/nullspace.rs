//! Near-null space of the collision constraint matrix.
//!
//! A grid function `ψ` is a discrete collisional invariant when `Mψ ≈ 0`. The
//! right singular vectors of `M` with singular value at most `sigma_tol` span
//! the discovered invariants, which are then compared against `span{𝟙, ω}`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::collision::ConstraintMatrix;
use crate::error::{Error, Result};
use crate::grid::GridFunction;

pub const DEFAULT_DENSE_MAX_COLS: usize = 4096;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MAX_ITERATIONS: usize = 2000;

/// Singular values reported past the cut by the dense path.
const REPORTED_EXTRA: usize = 8;
/// Rows per panel in the streamed QR factorisation.
const QR_PANEL_ROWS: usize = 2048;
const CHEBYSHEV_DEGREE: usize = 12;
const CLUSTER_SEPARATION: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMethod {
    /// Dense when `cols ≤ dense_max_cols`, iterative otherwise.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisOptions {
    pub sigma_tol: f64,
    pub method: BasisMethod,
    pub dense_max_cols: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl BasisOptions {
    pub fn new(sigma_tol: f64) -> Self {
        Self {
            sigma_tol,
            method: BasisMethod::Auto,
            dense_max_cols: DEFAULT_DENSE_MAX_COLS,
            seed: DEFAULT_SEED,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// Default cut `4·εE·√rows / ‖ω − ω̄‖₂`.
///
/// Each collision residual of `ω` is at most `εE`, so the unit vector along the
/// mean-free part of `ω` has `‖Mv‖₂ ≤ εE·√rows / ‖ω − ω̄‖₂`; the cut leaves a
/// factor 4 of headroom. When `ω` is constant the scale falls back to `‖𝟙‖₂`.
pub fn default_sigma_tol(epsilon_e: f64, rows: usize, omega: &GridFunction) -> f64 {
    let mean = omega.mean();
    let spread = omega
        .values()
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = if is_degenerate(omega) {
        (omega.values().len() as f64).sqrt()
    } else {
        spread
    };
    4.0 * epsilon_e * (rows as f64).sqrt() / scale
}

/// Orthonormal basis of the discovered invariants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantBasis {
    /// Unit vectors, one per retained singular value.
    pub vectors: Vec<Vec<f64>>,
    /// Smallest singular values in ascending order; the first `vectors.len()`
    /// belong to the basis, the rest lie above the cut.
    pub singular_values: Vec<f64>,
    pub sigma_tol: f64,
    /// `σ_{m+1} / σ_m` at the cut, when both sides of the cut are present.
    pub spectral_gap: Option<f64>,
    pub method: BasisMethod,
}

impl InvariantBasis {
    pub fn dimension(&self) -> usize {
        self.vectors.len()
    }
}

/// Number of singular values `≤ sigma_tol` and the gap ratio `σ_{m+1}/σ_m`.
///
/// The ratio is `None` when one side of the cut is empty and `+∞` when the
/// last retained value is exactly zero.
pub fn invariant_dimension(singular_values: &[f64], sigma_tol: f64) -> (usize, Option<f64>) {
    let m = singular_values.partition_point(|&s| s <= sigma_tol);
    let gap = if m == 0 || m == singular_values.len() {
        None
    } else if singular_values[m - 1] == 0.0 {
        Some(f64::INFINITY)
    } else {
        Some(singular_values[m] / singular_values[m - 1])
    };
    (m, gap)
}

pub fn compute_invariant_basis(
    m: &ConstraintMatrix,
    opts: &BasisOptions,
) -> Result<InvariantBasis> {
    if m.rows() == 0 {
        return Err(Error::EmptyConstraintSet);
    }
    if !(opts.sigma_tol.is_finite() && opts.sigma_tol >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma_tol must be >= 0, got {}",
            opts.sigma_tol
        )));
    }
    let dense = match opts.method {
        BasisMethod::Dense => true,
        BasisMethod::Iterative => false,
        BasisMethod::Auto => m.cols() <= opts.dense_max_cols,
    };
    if dense {
        dense_basis(m, opts.sigma_tol)
    } else {
        iterative_basis(m, opts)
    }
}

/// `R` factor of `M` (zero-padded to `cols × cols`), built panel by panel so
/// the dense matrix is never formed in full.
fn streamed_r(m: &ConstraintMatrix) -> DMatrix<f64> {
    let n = m.cols();
    let mut r = DMatrix::<f64>::zeros(0, n);
    let mut row = 0;
    while row < m.rows() {
        let end = (row + QR_PANEL_ROWS).min(m.rows());
        let mut stacked = DMatrix::<f64>::zeros(r.nrows() + end - row, n);
        stacked.rows_mut(0, r.nrows()).copy_from(&r);
        for (i, ri) in (row..end).enumerate() {
            for (c, v) in m.row(ri) {
                stacked[(r.nrows() + i, c)] = v;
            }
        }
        r = stacked.qr().r();
        row = end;
    }
    let mut square = DMatrix::zeros(n, n);
    square.rows_mut(0, r.nrows()).copy_from(&r);
    square
}

fn dense_basis(m: &ConstraintMatrix, sigma_tol: f64) -> Result<InvariantBasis> {
    let r = streamed_r(m);
    // nalgebra's SVD loses accuracy in interior singular values when vectors
    // are requested; take values from the values-only SVD and the basis from
    // the eigenvectors of RᵀR, which only needs the gap at the cut.
    let mut sorted: Vec<f64> = r
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sorted.sort_by(f64::total_cmp);
    let (dim, gap) = invariant_dimension(&sorted, sigma_tol);
    let eig = SymmetricEigen::new(r.transpose() * &r);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vectors = order[..dim]
        .iter()
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();
    let keep = (dim + REPORTED_EXTRA).min(sorted.len());
    Ok(InvariantBasis {
        vectors,
        singular_values: sorted[..keep].to_vec(),
        sigma_tol,
        spectral_gap: gap,
        method: BasisMethod::Dense,
    })
}

/// Block of column vectors stored column-major as an `n × p` matrix.
fn gram_apply(m: &ConstraintMatrix, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for j in 0..x.ncols() {
        let col: Vec<f64> = x.column(j).iter().copied().collect();
        out.set_column(j, &nalgebra::DVector::from_vec(m.gram_mul_vec(&col)));
    }
    out
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    let p = x.ncols();
    let q = x.qr().q();
    q.columns(0, p).into_owned()
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0))
}

/// Chebyshev-filtered block subspace iteration on `MᵀM`.
///
/// The polynomial filter damps the spectrum on `[a, b]`, where `a` is the
/// largest current Ritz value and `b ≥ ‖M‖₂²`, which amplifies the smallest
/// eigenvectors. The block doubles until it holds at least one Ritz value
/// above the cut, so every singular value `≤ sigma_tol` is captured.
fn iterative_basis(m: &ConstraintMatrix, opts: &BasisOptions) -> Result<InvariantBasis> {
    let n = m.cols();
    let upper = m.gram_norm_bound().max(f64::MIN_POSITIVE);
    let res_tol = 1e-12 * upper;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut p = 8.min(n);
    let mut x = orthonormalize(random_block(&mut rng, n, p));
    let mut last_residual = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        // Rayleigh–Ritz
        let gx = gram_apply(m, &x);
        let h = x.transpose() * &gx;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let y = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, order[j])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &x * &y;
        let gx = gx * &y;

        // ‖Mx‖ rather than √θ: Ritz values of null vectors carry O(ε‖MᵀM‖) roundoff
        let sigma: Vec<f64> = (0..p)
            .map(|j| {
                let v: Vec<f64> = x.column(j).iter().copied().collect();
                m.mul_vec(&v).iter().map(|r| r * r).sum::<f64>().sqrt()
            })
            .collect();
        let below = sigma.iter().filter(|&&s| s <= opts.sigma_tol).count();
        let wanted = (below + 1).min(p);
        last_residual = (0..wanted)
            .map(|j| (gx.column(j) - x.column(j) * theta[j]).norm())
            .fold(0.0, f64::max);

        if last_residual <= res_tol || p == n {
            // a cluster reaching the block edge converges slowly and can hide
            // smaller eigenvalues behind converged-looking Ritz pairs
            let separated = sigma[p - 1] >= CLUSTER_SEPARATION * sigma[wanted - 1];
            if p == n || (below < p && separated) {
                return Ok(finish_iterative(m, &x, wanted, opts.sigma_tol));
            }
            let extra = (2 * p).min(n) - p;
            let mut wider = DMatrix::zeros(n, p + extra);
            wider.columns_mut(0, p).copy_from(&x);
            wider
                .columns_mut(p, extra)
                .copy_from(&random_block(&mut rng, n, extra));
            p += extra;
            x = orthonormalize(wider);
            continue;
        }

        let a = theta[p - 1];
        if a < upper {
            let e = (upper - a) / 2.0;
            let c = (upper + a) / 2.0;
            let mut prev = x.clone();
            let mut cur = (gram_apply(m, &x) - &x * c) / e;
            for _ in 1..CHEBYSHEV_DEGREE {
                let next = (gram_apply(m, &cur) - &cur * c) * (2.0 / e) - &prev;
                prev = cur;
                cur = next;
            }
            x = orthonormalize(cur);
        } else {
            x = orthonormalize(gram_apply(m, &x));
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: opts.max_iterations,
        residual: last_residual,
    })
}

fn finish_iterative(
    m: &ConstraintMatrix,
    x: &DMatrix<f64>,
    wanted: usize,
    sigma_tol: f64,
) -> InvariantBasis {
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..wanted)
        .map(|j| {
            let v: Vec<f64> = x.column(j).iter().copied().collect();
            let sigma = m.mul_vec(&v).iter().map(|r| r * r).sum::<f64>().sqrt();
            (sigma, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let singular_values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let (dim, gap) = invariant_dimension(&singular_values, sigma_tol);
    InvariantBasis {
        vectors: pairs.into_iter().take(dim).map(|p| p.1).collect(),
        singular_values,
        sigma_tol,
        spectral_gap: gap,
        method: BasisMethod::Iterative,
    }
}

/// How well the discovered basis matches `span{𝟙, ω}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceComparison {
    /// Principal angles between `span(basis)` and the reference span, ascending.
    pub principal_angles: Vec<f64>,
    /// `‖P 𝟙‖² / ‖𝟙‖²` with `P` the orthogonal projector onto `span(basis)`.
    pub contains_constant: f64,
    /// `‖P ω‖² / ‖ω‖²`.
    pub contains_omega: f64,
    pub dimension: usize,
    /// `ω` is numerically constant, so the reference span is `span{𝟙}` alone.
    pub degenerate_span: bool,
}

fn is_degenerate(omega: &GridFunction) -> bool {
    let mean = omega.mean();
    let spread = omega
        .values()
        .iter()
        .map(|v| (v - mean).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm = omega.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    spread <= 1e-10 * norm.max(f64::MIN_POSITIVE)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn compare_to_affine_span(
    basis: &InvariantBasis,
    omega: &GridFunction,
) -> Result<SubspaceComparison> {
    let n = omega.values().len();
    if let Some(v) = basis.vectors.iter().find(|v| v.len() != n) {
        return Err(Error::GridMismatch(format!(
            "basis vectors have length {}, omega has {n} samples",
            v.len()
        )));
    }
    let w = omega.values();
    let e1 = vec![1.0 / (n as f64).sqrt(); n];
    let mut reference = vec![e1.clone()];
    let degenerate = is_degenerate(omega);
    if !degenerate {
        let mean = omega.mean();
        let perp: Vec<f64> = w.iter().map(|v| v - mean).collect();
        let norm = dot(&perp, &perp).sqrt();
        reference.push(perp.into_iter().map(|v| v / norm).collect());
    }

    let m = basis.vectors.len();
    let overlap = DMatrix::from_fn(m, reference.len(), |i, j| {
        dot(&basis.vectors[i], &reference[j])
    });
    let mut angles: Vec<f64> = if m == 0 {
        Vec::new()
    } else {
        overlap
            .singular_values()
            .iter()
            .map(|&s| s.min(1.0).acos())
            .collect()
    };
    angles.sort_by(f64::total_cmp);

    let captured = |v: &[f64]| -> f64 {
        let total = dot(v, v);
        if total == 0.0 {
            return 0.0;
        }
        let inside: f64 = basis.vectors.iter().map(|b| dot(b, v).powi(2)).sum();
        (inside / total).clamp(0.0, 1.0)
    };
    Ok(SubspaceComparison {
        principal_angles: angles,
        contains_constant: captured(&e1),
        contains_omega: captured(w),
        dimension: m,
        degenerate_span: degenerate,
    })
}

/// JSON sidecar written next to an exported basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSidecar {
    pub singular_values: Vec<f64>,
    pub sigma_tol: f64,
    pub dimension: usize,
}

impl From<&InvariantBasis> for BasisSidecar {
    fn from(b: &InvariantBasis) -> Self {
        Self {
            singular_values: b.singular_values.clone(),
            sigma_tol: b.sigma_tol,
            dimension: b.dimension(),
        }
    }
}

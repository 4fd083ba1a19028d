use nalgebra::{DMatrix, SymmetricEigen};

use super::bump::{axis_order, BumpTestFunction};
use super::quadrature::interpolation_weights;
use crate::dispersion::FourierDispersion;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

pub const DEFAULT_KAPPA_MAX: f64 = 1e6;
pub const DEFAULT_MARGIN: f64 = 0.05;

/// Where bumps may be placed: strictly inside the cell and at least `margin`
/// away from every point where `ω` is below `eps0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Admissibility {
    pub margin: f64,
    pub singular_points: Vec<Vec<f64>>,
}

impl Admissibility {
    /// Uses the grid samples of `ω` only.
    pub fn from_samples(omega: &GridFunction, eps0: f64, margin: f64) -> Self {
        let spec = omega.spec();
        let singular_points = omega
            .values()
            .iter()
            .enumerate()
            .filter(|(_, &w)| w < eps0)
            .map(|(i, _)| spec.point(i))
            .collect();
        Self {
            margin,
            singular_points,
        }
    }

    /// Grid samples plus the refined probe lattice of the dispersion.
    pub fn from_dispersion(
        disp: &FourierDispersion,
        grid: &GridSpec,
        eps0: f64,
        margin: f64,
    ) -> Result<Self> {
        Ok(Self {
            margin,
            singular_points: disp.near_singular_points(grid, eps0)?,
        })
    }

    pub fn check(&self, f: &BumpTestFunction) -> Result<()> {
        if !f.inside_cell() {
            return Err(Error::SupportViolation(format!(
                "support of bump at {:?} with widths {:?} leaves the cell",
                f.center, f.width
            )));
        }
        for p in &self.singular_points {
            let dist = f.distance_to(p);
            if dist < self.margin {
                return Err(Error::SupportViolation(format!(
                    "support of bump at {:?} is {dist:.3e} from near-singular point {p:?} (margin {})",
                    f.center, self.margin
                )));
            }
        }
        Ok(())
    }
}

impl Default for Admissibility {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            singular_points: Vec::new(),
        }
    }
}

/// `A(f)`, `B(f)` and, once `compute_c` has run, `C = A B⁻¹`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: Option<DMatrix<f64>>,
    pub cond_b: Option<f64>,
}

/// `A_αβ = ∫ψ ∂_α∂_β f` and `B_αβ = ∫ω ∂_α∂_β f`.
///
/// The integrals use the periodic cubic interpolant of the grid samples
/// against the analytic bump derivatives, so the result is linear in the
/// samples and `ψ = ω` gives `A = B` exactly.
pub fn compute_ab(
    psi: &GridFunction,
    omega: &GridFunction,
    f: &BumpTestFunction,
    admissibility: &Admissibility,
) -> Result<MomentMatrices> {
    let spec = *omega.spec();
    psi.ensure_same_grid(&spec, "psi")?;
    if f.dim() != spec.dim {
        return Err(Error::GridMismatch(format!(
            "{}-dimensional bump on a {}-dimensional grid",
            f.dim(),
            spec.dim
        )));
    }
    admissibility.check(f)?;
    let d = spec.dim;
    let n = spec.n_per_axis;

    // weights[j][order][n_j]
    let weights: Vec<[Vec<f64>; 3]> = (0..d)
        .map(|j| {
            let w = |o| interpolation_weights(n, spec.offset, f.center[j], f.width[j], o);
            [w(0), w(1), w(2)]
        })
        .collect();
    let support: Vec<Vec<usize>> = weights
        .iter()
        .map(|w| (0..n).filter(|&i| w.iter().any(|v| v[i] != 0.0)).collect())
        .collect();

    let mut a = DMatrix::zeros(d, d);
    let mut b = DMatrix::zeros(d, d);
    let mut multi = vec![0usize; d];
    let total: usize = support.iter().map(Vec::len).product();
    for mut code in 0..total {
        for j in (0..d).rev() {
            let len = support[j].len();
            multi[j] = support[j][code % len];
            code /= len;
        }
        let flat = spec.flat_index(&multi);
        let (p, w) = (psi.values()[flat], omega.values()[flat]);
        for al in 0..d {
            for be in al..d {
                let weight: f64 = (0..d)
                    .map(|j| weights[j][axis_order(j, al, be)][multi[j]])
                    .product();
                a[(al, be)] += p * weight;
                b[(al, be)] += w * weight;
            }
        }
    }
    for al in 0..d {
        for be in 0..al {
            a[(al, be)] = a[(be, al)];
            b[(al, be)] = b[(be, al)];
        }
    }
    Ok(MomentMatrices {
        a,
        b,
        c: None,
        cond_b: None,
    })
}

/// 2-norm condition number of a symmetric matrix.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
            (lo.min(e.abs()), hi.max(e.abs()))
        });
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Sets `C = A B⁻¹` and records `cond(B)`.
pub fn compute_c(mut mm: MomentMatrices, kappa_max: f64) -> Result<MomentMatrices> {
    let cond = condition_number(&mm.b);
    if !(cond <= kappa_max) {
        return Err(Error::IllConditionedB { cond, kappa_max });
    }
    let inv = mm.b.clone().try_inverse().ok_or(Error::IllConditionedB {
        cond: f64::INFINITY,
        kappa_max,
    })?;
    mm.c = Some(&mm.a * inv);
    mm.cond_b = Some(cond);
    Ok(mm)
}

/// Result of the two-bump moment relation check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRelation {
    pub max_abs_violation: f64,
    /// Frobenius norms of `A(f₁)` and `B(f₂)`, for scaling the violation.
    pub a_norm: f64,
    pub b_tilde_norm: f64,
}

/// `max |A_αγ B̃_βδ + Ã_αδ B_βγ − A_βγ B̃_αδ − Ã_βδ B_αγ|` over all index
/// quadruples, with `A, B` from `f1` and `Ã, B̃` from `f2`.
pub fn check_moment_relation(
    psi: &GridFunction,
    omega: &GridFunction,
    f1: &BumpTestFunction,
    f2: &BumpTestFunction,
    admissibility: &Admissibility,
) -> Result<MomentRelation> {
    let m1 = compute_ab(psi, omega, f1, admissibility)?;
    let m2 = compute_ab(psi, omega, f2, admissibility)?;
    let (a, b, at, bt) = (&m1.a, &m1.b, &m2.a, &m2.b);
    let d = a.nrows();
    let mut worst: f64 = 0.0;
    for al in 0..d {
        for be in 0..d {
            for ga in 0..d {
                for de in 0..d {
                    let v = a[(al, ga)] * bt[(be, de)] + at[(al, de)] * b[(be, ga)]
                        - a[(be, ga)] * bt[(al, de)]
                        - at[(be, de)] * b[(al, ga)];
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    Ok(MomentRelation {
        max_abs_violation: worst,
        a_norm: a.norm(),
        b_tilde_norm: bt.norm(),
    })
}

//! Lattice-periodic dispersion relations defined by the Fourier coefficients of `ω²`.
//!
//! `ω(k)² = Σ_n γ(n) cos(2π k·n)` with `γ(−n) = γ(n)`, so `ω` is real, even and
//! `ℤ^d`-periodic. All derivatives are analytic in the coefficients; `ω` itself
//! is only smooth away from its zeros, which is where [`Error::NearSingularSet`]
//! is raised.

mod degeneracy;
mod models;

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpec};

pub use degeneracy::{degeneracy_profile, DegeneracyProfile};
pub use models::{CoefficientEntry, CoefficientFile, Model};

/// `ω²` values in `[-NEGATIVE_TOLERANCE, 0)` are treated as roundoff and clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-12;

/// Default threshold below which `ω` counts as touching the singular set.
pub const DEFAULT_EPS0: f64 = 1e-3;

/// Maximum number of lattice points used to validate `ω² ≥ 0` at construction.
const VALIDATION_BUDGET: usize = 1 << 16;

/// A single-band dispersion relation built from the Fourier series of `ω²`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierDispersion {
    dim: usize,
    /// Full symmetric coefficient table (both `n` and `−n` present).
    coeffs: BTreeMap<Vec<i64>, f64>,
    gamma0: f64,
    /// One representative per `±n` pair, stored as `(n, 2γ(n))`.
    pairs: Vec<(Vec<f64>, f64)>,
}

impl FourierDispersion {
    /// Builds a dispersion from `(n, γ(n))` entries.
    ///
    /// Missing partners `γ(−n)` are inserted; a partner that disagrees by more
    /// than `1e-12` is rejected, as is any entry with the wrong length or a
    /// non-finite value. The resulting `ω²` is checked for negativity on a
    /// validation lattice.
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::MalformedCoefficients(
                "dimension must be >= 1".into(),
            ));
        }
        let mut coeffs: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        for (i, (n, gamma)) in entries.into_iter().enumerate() {
            if n.len() != dim {
                return Err(Error::MalformedCoefficients(format!(
                    "coeffs[{i}]: n = {n:?} has {} components, expected {dim}",
                    n.len()
                )));
            }
            if !gamma.is_finite() {
                return Err(Error::MalformedCoefficients(format!(
                    "coeffs[{i}]: gamma for n = {n:?} is not finite"
                )));
            }
            let neg: Vec<i64> = n.iter().map(|&x| -x).collect();
            for key in [&n, &neg] {
                match coeffs.get(key) {
                    Some(&prev) if (prev - gamma).abs() > 1e-12 => {
                        return Err(Error::MalformedCoefficients(format!(
                            "coeffs[{i}]: gamma({key:?}) = {gamma} conflicts with earlier value {prev}"
                        )));
                    }
                    Some(_) => {}
                    None => {
                        coeffs.insert(key.clone(), gamma);
                    }
                }
            }
        }
        if coeffs.is_empty() {
            return Err(Error::MalformedCoefficients("no coefficients given".into()));
        }

        let zero = vec![0i64; dim];
        let gamma0 = coeffs.get(&zero).copied().unwrap_or(0.0);
        let pairs = coeffs
            .iter()
            .filter(|(n, _)| is_positive_representative(n))
            .map(|(n, &g)| (n.iter().map(|&x| x as f64).collect(), 2.0 * g))
            .collect();
        let disp = Self {
            dim,
            coeffs,
            gamma0,
            pairs,
        };
        disp.validate()?;
        Ok(disp)
    }

    fn validate(&self) -> Result<()> {
        let per_axis = ((VALIDATION_BUDGET as f64)
            .powf(1.0 / self.dim as f64)
            .floor() as usize)
            .clamp(2, 64);
        let lattice = GridSpec {
            dim: self.dim,
            n_per_axis: per_axis,
            offset: 0.0,
        };
        for k in lattice.points() {
            self.omega_sq(&k)?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Symmetric coefficient table, including both members of each `±n` pair.
    pub fn coefficients(&self) -> &BTreeMap<Vec<i64>, f64> {
        &self.coeffs
    }

    /// `ω(k)²` after clamping roundoff negatives to zero.
    pub fn omega_sq(&self, k: &[f64]) -> Result<f64> {
        self.check_point(k)?;
        let r = reduce(k);
        let mut w2 = self.gamma0;
        for (n, g2) in &self.pairs {
            w2 += g2 * (2.0 * PI * dot(&r, n)).cos();
        }
        self.clamp(k, w2)
    }

    pub fn omega(&self, k: &[f64]) -> Result<f64> {
        Ok(self.omega_sq(k)?.sqrt())
    }

    /// `∇ω = ∇(ω²) / (2ω)`; fails with [`Error::NearSingularSet`] when `ω(k) < eps0`.
    pub fn gradient(&self, k: &[f64], eps0: f64) -> Result<Vec<f64>> {
        let jet = self.jet(k, eps0)?;
        Ok(jet.grad)
    }

    /// Hessian of `ω`, exactly symmetric.
    pub fn hessian(&self, k: &[f64], eps0: f64) -> Result<DMatrix<f64>> {
        Ok(self.jet(k, eps0)?.hess)
    }

    pub fn hessian_det(&self, k: &[f64], eps0: f64) -> Result<f64> {
        Ok(self.hessian(k, eps0)?.determinant())
    }

    /// Value, gradient and Hessian of `ω` in a single pass over the coefficients.
    pub fn jet(&self, k: &[f64], eps0: f64) -> Result<Jet> {
        self.check_point(k)?;
        let d = self.dim;
        let r = reduce(k);
        let mut w2 = self.gamma0;
        let mut g2 = vec![0.0; d];
        let mut h2 = DMatrix::<f64>::zeros(d, d);
        for (n, c) in &self.pairs {
            let theta = 2.0 * PI * dot(&r, n);
            let (s, co) = theta.sin_cos();
            w2 += c * co;
            for a in 0..d {
                g2[a] -= c * 2.0 * PI * n[a] * s;
                for b in a..d {
                    h2[(a, b)] -= c * 4.0 * PI * PI * n[a] * n[b] * co;
                }
            }
        }
        let w2 = self.clamp(k, w2)?;
        let w = w2.sqrt();
        if !(w >= eps0) {
            return Err(Error::NearSingularSet {
                k: k.to_vec(),
                omega: w,
                eps0,
            });
        }
        let grad: Vec<f64> = g2.iter().map(|g| g / (2.0 * w)).collect();
        let mut hess = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = h2[(a, b)] / (2.0 * w) - g2[a] * g2[b] / (4.0 * w * w * w);
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        Ok(Jet {
            value: w,
            grad,
            hess,
        })
    }

    /// Samples `ω` at every grid point in row-major order.
    pub fn sample(&self, grid: &GridSpec) -> Result<GridFunction> {
        self.check_grid(grid)?;
        let values = grid
            .points()
            .map(|k| self.omega(&k))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(*grid, values)
    }

    /// `max_k |∇ω(k)|_∞` over the grid, skipping points with `ω < eps0`.
    pub fn max_gradient(&self, grid: &GridSpec, eps0: f64) -> Result<f64> {
        self.check_grid(grid)?;
        let mut best: f64 = 0.0;
        for k in grid.points() {
            match self.gradient(&k, eps0) {
                Ok(g) => best = g.iter().fold(best, |m, x| m.max(x.abs())),
                Err(Error::NearSingularSet { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(best)
    }

    /// Locations where `ω < eps0`, found on the working grid and on a 4× refined
    /// probe lattice that includes `k = 0` and the zone corners.
    pub fn near_singular_points(&self, grid: &GridSpec, eps0: f64) -> Result<Vec<Vec<f64>>> {
        self.check_grid(grid)?;
        let probe = GridSpec {
            dim: grid.dim,
            n_per_axis: 4 * grid.n_per_axis,
            offset: 0.0,
        };
        let mut out = Vec::new();
        for lattice in [grid, &probe] {
            for k in lattice.points() {
                if self.omega(&k)? < eps0 {
                    out.push(k);
                }
            }
        }
        Ok(out)
    }

    fn check_point(&self, k: &[f64]) -> Result<()> {
        if k.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "wave vector has {} components, dispersion is {}-dimensional",
                k.len(),
                self.dim
            )));
        }
        if k.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "wave vector {k:?} is not finite"
            )));
        }
        Ok(())
    }

    pub(crate) fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.dim != self.dim {
            return Err(Error::GridMismatch(format!(
                "{}-dimensional grid for a {}-dimensional dispersion",
                grid.dim, self.dim
            )));
        }
        Ok(())
    }

    fn clamp(&self, k: &[f64], w2: f64) -> Result<f64> {
        if w2 >= 0.0 {
            Ok(w2)
        } else if w2 >= -NEGATIVE_TOLERANCE {
            Ok(0.0)
        } else {
            Err(Error::InvalidDispersion {
                k: k.to_vec(),
                value: w2,
            })
        }
    }
}

/// `ω` with its first and second derivatives at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// Maps each component into `[-1/2, 1/2]`. Exact in floating point, and odd:
/// `reduce(-k) == -reduce(k)` bit for bit.
fn reduce(k: &[f64]) -> Vec<f64> {
    k.iter().map(|&x| x - x.round()).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// First nonzero component positive.
fn is_positive_representative(n: &[i64]) -> bool {
    n.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(d: usize) -> FourierDispersion {
        Model::NearestNeighbor.build(d).unwrap()
    }

    fn gapped(d: usize, m: f64) -> FourierDispersion {
        Model::Gapped(m).build(d).unwrap()
    }

    #[test]
    fn nn_values() {
        let disp = nn(2);
        assert_eq!(disp.omega(&[0.0, 0.0]).unwrap(), 0.0);
        assert!((disp.omega(&[0.5, 0.5]).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert!((gapped(2, 1.0).omega(&[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn gapped_gradient_vanishes_at_origin() {
        let g = gapped(2, 1.0).gradient(&[0.0, 0.0], DEFAULT_EPS0).unwrap();
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn near_singular_gradient_is_rejected() {
        let err = nn(2).gradient(&[1e-9, 0.0], 1e-3).unwrap_err();
        assert!(matches!(err, Error::NearSingularSet { .. }));
        assert!(matches!(
            nn(2).hessian_det(&[0.0, 0.0], 1e-3),
            Err(Error::NearSingularSet { .. })
        ));
    }

    #[test]
    fn gapped_hessian_at_origin() {
        // ω ≈ m + 2π²|k|²/m near the origin, so Hess ω(0) = (4π²/m) I.
        let four_pi2 = 4.0 * PI * PI;
        let h = gapped(2, 1.0).hessian(&[0.0, 0.0], DEFAULT_EPS0).unwrap();
        assert!((h[(0, 0)] - four_pi2).abs() < 1e-10);
        assert!((h[(1, 1)] - four_pi2).abs() < 1e-10);
        assert_eq!(h[(0, 1)], 0.0);
        let h2 = gapped(2, 2.0).hessian(&[0.0, 0.0], DEFAULT_EPS0).unwrap();
        assert!((h2[(0, 0)] - four_pi2 / 2.0).abs() < 1e-10);

        let det2 = gapped(2, 1.0)
            .hessian_det(&[0.0, 0.0], DEFAULT_EPS0)
            .unwrap();
        assert!((det2 - four_pi2 * four_pi2).abs() < 1e-8, "{det2}");
        assert!((det2 - 1558.545).abs() < 1e-3);
        let det1 = gapped(1, 1.0).hessian_det(&[0.0], DEFAULT_EPS0).unwrap();
        assert!((det1 - four_pi2).abs() < 1e-10);
    }

    #[test]
    fn hessian_is_exactly_symmetric() {
        let disp = FourierDispersion::new(
            3,
            vec![
                (vec![0, 0, 0], 10.0),
                (vec![1, 0, 0], -1.0),
                (vec![0, 1, 0], -1.0),
                (vec![0, 0, 1], -1.0),
                (vec![1, 1, 0], -0.3),
                (vec![1, -1, 1], -0.2),
            ],
        )
        .unwrap();
        let h = disp.hessian(&[0.13, -0.31, 0.27], DEFAULT_EPS0).unwrap();
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn sample_small_grid() {
        let grid = GridSpec::centered(2, 2).unwrap();
        let s = nn(2).sample(&grid).unwrap();
        assert_eq!(s.values().len(), 4);
        for v in s.values() {
            assert!((v - 2.0).abs() < 1e-14);
        }
        let c = Model::Constant(1.0)
            .build(2)
            .unwrap()
            .sample(&grid)
            .unwrap();
        assert!(c.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn negative_omega_sq_is_rejected() {
        let err = FourierDispersion::new(1, vec![(vec![0], 1.0), (vec![1], -1.0)]).unwrap_err();
        assert!(matches!(err, Error::InvalidDispersion { .. }));
    }

    #[test]
    fn symmetrization_and_conflicts() {
        let disp = FourierDispersion::new(1, vec![(vec![0], 2.0), (vec![1], -1.0)]).unwrap();
        assert_eq!(disp.coefficients().get(&vec![-1]), Some(&-1.0));
        let err =
            FourierDispersion::new(1, vec![(vec![0], 2.0), (vec![1], -1.0), (vec![-1], -0.5)])
                .unwrap_err();
        assert!(err.to_string().contains("coeffs[2]"), "{err}");
        let err = FourierDispersion::new(2, vec![(vec![0], 2.0)]).unwrap_err();
        assert!(err.to_string().contains("coeffs[0]"), "{err}");
    }

    #[test]
    fn wrong_dimension_point_is_rejected() {
        assert!(nn(2).omega(&[0.1]).is_err());
        assert!(nn(2).omega(&[0.1, f64::NAN]).is_err());
    }

    #[test]
    fn probe_finds_origin_of_nn_model() {
        let grid = GridSpec::centered(2, 8).unwrap();
        let pts = nn(2).near_singular_points(&grid, DEFAULT_EPS0).unwrap();
        assert_eq!(pts, vec![vec![0.0, 0.0]]);
        assert!(gapped(2, 1.0)
            .near_singular_points(&grid, DEFAULT_EPS0)
            .unwrap()
            .is_empty());
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bump::BumpTestFunction;
use super::fit::MIN_FAMILY_SIZE;
use super::moments::{compute_ab, compute_c, Admissibility, DEFAULT_KAPPA_MAX};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

const PRIMES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    pub size: usize,
    pub seed: u64,
    pub min_width: f64,
    pub max_width: f64,
    pub kappa_max: f64,
    pub max_draws: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            size: 10,
            seed: 42,
            min_width: 0.1,
            max_width: 0.2,
            kappa_max: DEFAULT_KAPPA_MAX,
            max_draws: 100,
        }
    }
}

/// Admissible bumps in draw order, with `cond(B)` of each. May hold fewer
/// than the requested size if the draw budget runs out, but never fewer than
/// [`MIN_FAMILY_SIZE`].
#[derive(Debug, Clone, PartialEq)]
pub struct BumpFamily {
    pub members: Vec<BumpTestFunction>,
    pub cond_b: Vec<f64>,
    pub draws: usize,
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

impl BumpFamily {
    /// Halton centres and widths under a seeded Cranley–Patterson rotation;
    /// candidates failing admissibility or the `cond(B)` bound are skipped.
    pub fn generate(
        omega: &GridFunction,
        admissibility: &Admissibility,
        opts: &FamilyOptions,
    ) -> Result<Self> {
        let d = omega.spec().dim;
        if 2 * d > PRIMES.len() {
            return Err(Error::InvalidArgument(format!(
                "bump families support at most {} dimensions",
                PRIMES.len() / 2
            )));
        }
        if !(opts.min_width > 0.0 && opts.min_width <= opts.max_width && opts.max_width < 0.5) {
            return Err(Error::InvalidArgument(format!(
                "bump widths must satisfy 0 < {} <= {} < 0.5",
                opts.min_width, opts.max_width
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let shift: Vec<f64> = (0..2 * d).map(|_| rng.random_range(0.0..1.0)).collect();
        let coord = |i: u64, axis: usize| (radical_inverse(i, PRIMES[axis]) + shift[axis]).fract();

        let mut members = Vec::new();
        let mut cond_b = Vec::new();
        let mut draws = 0;
        while members.len() < opts.size && draws < opts.max_draws {
            draws += 1;
            let i = draws as u64;
            let center = (0..d).map(|j| coord(i, j) - 0.5).collect();
            let width = (0..d)
                .map(|j| opts.min_width + (opts.max_width - opts.min_width) * coord(i, d + j))
                .collect();
            let f = BumpTestFunction::new(center, width)?;
            let mm = match compute_ab(omega, omega, &f, admissibility) {
                Ok(mm) => mm,
                Err(Error::SupportViolation(_)) => continue,
                Err(e) => return Err(e),
            };
            match compute_c(mm, opts.kappa_max) {
                Ok(mm) => {
                    cond_b.push(mm.cond_b.unwrap_or(f64::NAN));
                    members.push(f);
                }
                Err(Error::IllConditionedB { .. }) => continue,
                Err(e) => return Err(e),
            }
        }
        if members.len() < MIN_FAMILY_SIZE {
            return Err(Error::InsufficientTestFunctions {
                found: members.len(),
                required: MIN_FAMILY_SIZE,
            });
        }
        Ok(Self {
            members,
            cond_b,
            draws,
        })
    }
}

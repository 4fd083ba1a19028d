use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::BumpTestFunction;
use super::moments::{compute_ab, compute_c, Admissibility};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

pub const MIN_FAMILY_SIZE: usize = 3;

/// Scalar structure of `C(f)` across a family of bumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarCheck {
    pub a_est: f64,
    pub a_spread: f64,
    pub offdiag_max: f64,
    /// `cond(B)` for every member that was kept, in family order.
    pub cond_b: Vec<f64>,
    /// Family indices dropped for an ill-conditioned `B`.
    pub dropped: Vec<usize>,
}

/// Computes `C(f)` for each member, dropping those with ill-conditioned `B`.
pub fn check_scalar_c(
    psi: &GridFunction,
    omega: &GridFunction,
    family: &[BumpTestFunction],
    admissibility: &Admissibility,
    kappa_max: f64,
) -> Result<ScalarCheck> {
    let results: Vec<Result<_>> = family
        .par_iter()
        .map(|f| compute_ab(psi, omega, f, admissibility).and_then(|mm| compute_c(mm, kappa_max)))
        .collect();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(mm) => kept.push(mm),
            Err(Error::IllConditionedB { .. }) => dropped.push(i),
            Err(e) => return Err(e),
        }
    }
    if kept.len() < MIN_FAMILY_SIZE {
        return Err(Error::InsufficientTestFunctions {
            found: kept.len(),
            required: MIN_FAMILY_SIZE,
        });
    }
    let d = kept[0].a.nrows();
    let cs: Vec<_> = kept
        .iter()
        .map(|mm| mm.c.as_ref().expect("compute_c sets C"))
        .collect();
    let diag_count = (cs.len() * d) as f64;
    let a_est = cs.iter().map(|c| c.diagonal().sum()).sum::<f64>() / diag_count;
    let mut a_spread: f64 = 0.0;
    let mut offdiag_max: f64 = 0.0;
    for c in &cs {
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    a_spread = a_spread.max((c[(i, i)] - a_est).abs());
                } else {
                    offdiag_max = offdiag_max.max(c[(i, j)].abs());
                }
            }
        }
    }
    Ok(ScalarCheck {
        a_est,
        a_spread,
        offdiag_max,
        cond_b: kept
            .iter()
            .map(|mm| mm.cond_b.unwrap_or(f64::NAN))
            .collect(),
        dropped,
    })
}

/// `ψ ≈ aω + c`. The linear term `b·k` is always zero for periodic `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub residual_l1: f64,
    pub residual_linf: f64,
}

pub fn fit_affine(psi: &GridFunction, omega: &GridFunction, a_est: f64) -> Result<AffineFit> {
    psi.ensure_same_grid(omega.spec(), "psi")?;
    let p = psi.values().len() as f64;
    let c = psi
        .values()
        .iter()
        .zip(omega.values())
        .map(|(s, w)| s - a_est * w)
        .sum::<f64>()
        / p;
    let (mut l1, mut linf) = (0.0, 0.0f64);
    for (s, w) in psi.values().iter().zip(omega.values()) {
        let r = (s - a_est * w - c).abs();
        l1 += r;
        linf = linf.max(r);
    }
    Ok(AffineFit {
        a: a_est,
        b: 0.0,
        c,
        residual_l1: l1 / p,
        residual_linf: linf,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Affine,
    NonAffine,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Affine => "affine",
            Verdict::NonAffine => "non-affine",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Full verification outcome for one candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub a_est: f64,
    pub c_est: f64,
    pub a_spread: f64,
    pub offdiag_max: f64,
    pub residual_l1: f64,
    pub residual_linf: f64,
    #[serde(rename = "cond_B_list")]
    pub cond_b_list: Vec<f64>,
    pub verdict: Verdict,
    pub tau_a: f64,
    pub tau_r: f64,
    pub family_size: usize,
}

/// Scalar-structure tolerance `τ_a = 1e-3·max(1, |a|)`.
pub fn scalar_tolerance(a_est: f64) -> f64 {
    1e-3 * a_est.abs().max(1.0)
}

/// Residual tolerance `τ_r = 1e-3·(max ω − min ω)`.
pub fn residual_tolerance(omega: &GridFunction) -> f64 {
    1e-3 * (omega.max() - omega.min())
}

/// Scalar check, affine fit and verdict in one call.
///
/// Both tests passing gives `Affine`, both failing `NonAffine`, a split `Inconclusive`.
pub fn verify_candidate(
    psi: &GridFunction,
    omega: &GridFunction,
    family: &[BumpTestFunction],
    admissibility: &Admissibility,
    kappa_max: f64,
) -> Result<VerificationReport> {
    let sc = check_scalar_c(psi, omega, family, admissibility, kappa_max)?;
    let fit = fit_affine(psi, omega, sc.a_est)?;
    let tau_a = scalar_tolerance(sc.a_est);
    let tau_r = residual_tolerance(omega);
    let scalar_ok = sc.a_spread <= tau_a && sc.offdiag_max <= tau_a;
    let fit_ok = fit.residual_linf <= tau_r;
    let verdict = match (scalar_ok, fit_ok) {
        (true, true) => Verdict::Affine,
        (false, false) => Verdict::NonAffine,
        _ => Verdict::Inconclusive,
    };
    Ok(VerificationReport {
        a_est: sc.a_est,
        c_est: fit.c,
        a_spread: sc.a_spread,
        offdiag_max: sc.offdiag_max,
        residual_l1: fit.residual_l1,
        residual_linf: fit.residual_linf,
        cond_b_list: sc.cond_b,
        verdict,
        tau_a,
        tau_r,
        family_size: family.len() - sc.dropped.len(),
    })
}

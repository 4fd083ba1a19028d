use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bump::BumpTestFunction;
use super::moments::Admissibility;
use super::quadrature::tanh_rule;
use crate::dispersion::FourierDispersion;
use crate::error::{Error, Result};

/// Built-in weights `φ(η, ε)` with `η = k₁ + k₂`, `ε = ω(k₁) + ω(k₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmoothPhi {
    Constant,
    Eps,
    EpsSq,
    SinEta1Eps,
    ExpNegEps,
}

impl SmoothPhi {
    pub const ALL: [SmoothPhi; 5] = [
        SmoothPhi::Constant,
        SmoothPhi::Eps,
        SmoothPhi::EpsSq,
        SmoothPhi::SinEta1Eps,
        SmoothPhi::ExpNegEps,
    ];

    /// `(φ, ∂_ε φ)`.
    pub fn eval(self, eta: &[f64], eps: f64) -> (f64, f64) {
        match self {
            SmoothPhi::Constant => (1.0, 0.0),
            SmoothPhi::Eps => (eps, 1.0),
            SmoothPhi::EpsSq => (eps * eps, 2.0 * eps),
            SmoothPhi::SinEta1Eps => {
                let s = (TAU * eta[0]).sin();
                (s * eps, s)
            }
            SmoothPhi::ExpNegEps => {
                let e = (-eps).exp();
                (e, -e)
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SmoothPhi::Constant => "constant",
            SmoothPhi::Eps => "eps",
            SmoothPhi::EpsSq => "eps_sq",
            SmoothPhi::SinEta1Eps => "sin_eta1_eps",
            SmoothPhi::ExpNegEps => "exp_neg_eps",
        }
    }
}

impl fmt::Display for SmoothPhi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SmoothPhi {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown phi '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpCheck {
    /// `∫ φ ∂_α(f ∂_β Ω)` with `Ω = ω(k₁) + ω(k₂)` acting through the antisymmetric derivative.
    pub lhs: f64,
    /// Same expression with `α` and `β` exchanged.
    pub rhs: f64,
    /// `−∫ ∂_ε φ · g_α g_β f`, the symmetric middle form both sides reduce to.
    pub middle: f64,
    pub rel_diff: f64,
}

struct Node {
    k: Vec<f64>,
    weight: f64,
    omega: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
    f: f64,
    df: Vec<f64>,
}

fn nodes(
    disp: &FourierDispersion,
    f: &BumpTestFunction,
    resolution: usize,
    eps0: f64,
) -> Result<Vec<Node>> {
    let d = f.dim();
    let rules: Vec<_> = (0..d)
        .map(|j| tanh_rule(f.center[j], f.width[j], resolution))
        .collect();
    let total = resolution.pow(d as u32);
    (0..total)
        .map(|mut code| {
            let mut k = vec![0.0; d];
            let mut weight = 1.0;
            for j in (0..d).rev() {
                let (x, w) = rules[j][code % resolution];
                code /= resolution;
                k[j] = x;
                weight *= w;
            }
            let jet = disp.jet(&k, eps0)?;
            let bj = f.jet(&k);
            Ok(Node {
                weight,
                omega: jet.value,
                grad: jet.grad,
                hess: jet.hess.iter().copied().collect(),
                f: bj.value,
                df: bj.grad,
                k,
            })
        })
        .collect()
}

/// Compares the two orderings of the double integral over `(k₁, k₂)` with
/// test function `f₁(k₁) f₂(k₂)`:
///
/// `∫ φ [ (D_α f) g_β + f H_αβ ]` against the same with `α ↔ β`, where
/// `D = ∂_{k₁} − ∂_{k₂}`, `g = ∇ω(k₁) − ∇ω(k₂)` and `H = Hess ω(k₁) + Hess ω(k₂)`.
/// Quadrature is the tanh-mapped rectangle rule with `resolution` nodes per axis
/// on each bump's support; derivatives are analytic.
#[allow(clippy::too_many_arguments)]
pub fn verify_ibp_identity(
    disp: &FourierDispersion,
    phi: SmoothPhi,
    f1: &BumpTestFunction,
    f2: &BumpTestFunction,
    alpha: usize,
    beta: usize,
    resolution: usize,
    admissibility: &Admissibility,
    eps0: f64,
) -> Result<IbpCheck> {
    let d = disp.dim();
    if f1.dim() != d || f2.dim() != d {
        return Err(Error::InvalidArgument(format!(
            "bumps must be {d}-dimensional"
        )));
    }
    if alpha >= d || beta >= d {
        return Err(Error::InvalidArgument(format!(
            "axis indices ({alpha}, {beta}) out of range for d = {d}"
        )));
    }
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    admissibility.check(f1)?;
    admissibility.check(f2)?;
    let s1 = nodes(disp, f1, resolution, eps0)?;
    let s2 = nodes(disp, f2, resolution, eps0)?;
    let (ab, ba) = (alpha * d + beta, beta * d + alpha);

    let partials: Vec<[f64; 3]> = s1
        .par_iter()
        .map(|p| {
            let mut acc = [0.0; 3];
            let mut eta = vec![0.0; d];
            for q in &s2 {
                let w = p.weight * q.weight;
                let ff = p.f * q.f;
                if ff == 0.0 && p.df.iter().chain(&q.df).all(|&x| x == 0.0) {
                    continue;
                }
                for j in 0..d {
                    eta[j] = p.k[j] + q.k[j];
                }
                let (ph, ph_eps) = phi.eval(&eta, p.omega + q.omega);
                let df_a = p.df[alpha] * q.f - p.f * q.df[alpha];
                let df_b = p.df[beta] * q.f - p.f * q.df[beta];
                let g_a = p.grad[alpha] - q.grad[alpha];
                let g_b = p.grad[beta] - q.grad[beta];
                let h_ab = p.hess[ab] + q.hess[ab];
                let h_ba = p.hess[ba] + q.hess[ba];
                acc[0] += w * ph * (df_a * g_b + ff * h_ab);
                acc[1] += w * ph * (df_b * g_a + ff * h_ba);
                acc[2] -= w * ph_eps * g_a * g_b * ff;
            }
            acc
        })
        .collect();
    let mut total = [0.0; 3];
    for p in &partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    let [lhs, rhs, middle] = total;
    let scale = lhs.abs().max(rhs.abs());
    let rel_diff = if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).abs() / scale
    };
    Ok(IbpCheck {
        lhs,
        rhs,
        middle,
        rel_diff,
    })
}

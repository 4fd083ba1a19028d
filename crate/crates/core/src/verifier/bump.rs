use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tensor-product bump `f(k) = Π_j b((k_j − c_j) / w_j)` with
/// `b(t) = exp(−1/(1−t²))` on `|t| < 1` and zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpTestFunction {
    pub center: Vec<f64>,
    /// Half-widths of the support box, per axis.
    pub width: Vec<f64>,
}

/// Value, gradient and Hessian of a bump at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
}

/// `b`, `b'` and `b''` at `t`, given `s = 1 − t²` computed by the caller.
pub(crate) fn profile(t: f64, s: f64) -> [f64; 3] {
    if !(s > 0.0) {
        return [0.0; 3];
    }
    let b = (-1.0 / s).exp();
    if b == 0.0 {
        return [0.0; 3];
    }
    let s2 = s * s;
    [
        b,
        -2.0 * t / s2 * b,
        (6.0 * t.powi(4) - 2.0) / (s2 * s2) * b,
    ]
}

pub(crate) fn profile_at(t: f64) -> [f64; 3] {
    if t.abs() >= 1.0 {
        return [0.0; 3];
    }
    profile(t, (1.0 - t) * (1.0 + t))
}

impl BumpTestFunction {
    pub fn new(center: Vec<f64>, width: Vec<f64>) -> Result<Self> {
        if center.is_empty() || center.len() != width.len() {
            return Err(Error::InvalidArgument(format!(
                "bump center has {} components and width {}",
                center.len(),
                width.len()
            )));
        }
        if center.iter().any(|c| !c.is_finite())
            || width.iter().any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::InvalidArgument(
                "bump center must be finite and widths positive".into(),
            ));
        }
        Ok(Self { center, width })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Support box `[c − w, c + w]` lies strictly inside `[-1/2, 1/2)^d`.
    pub fn inside_cell(&self) -> bool {
        self.center
            .iter()
            .zip(&self.width)
            .all(|(c, w)| c - w > -0.5 && c + w < 0.5)
    }

    /// Euclidean distance from the support box to `p`, over periodic images of `p`.
    pub fn distance_to(&self, p: &[f64]) -> f64 {
        let d = self.dim();
        let mut best = f64::INFINITY;
        for image in 0..3usize.pow(d as u32) {
            let mut code = image;
            let mut dist2 = 0.0;
            for j in 0..d {
                let shift = (code % 3) as f64 - 1.0;
                code /= 3;
                let gap = ((p[j] + shift) - self.center[j]).abs() - self.width[j];
                if gap > 0.0 {
                    dist2 += gap * gap;
                }
            }
            best = best.min(dist2.sqrt());
        }
        best
    }

    /// Per-axis `[b, b'/w, b''/w²]` at `k`.
    fn axis_factors(&self, k: &[f64]) -> Vec<[f64; 3]> {
        (0..self.dim())
            .map(|j| {
                let w = self.width[j];
                let [b0, b1, b2] = profile_at((k[j] - self.center[j]) / w);
                [b0, b1 / w, b2 / (w * w)]
            })
            .collect()
    }

    pub fn value(&self, k: &[f64]) -> f64 {
        self.axis_factors(k).iter().map(|f| f[0]).product()
    }

    /// Analytic value, gradient and Hessian; all zero outside the support.
    pub fn jet(&self, k: &[f64]) -> BumpJet {
        let d = self.dim();
        let f = self.axis_factors(k);
        let product =
            |orders: &dyn Fn(usize) -> usize| -> f64 { (0..d).map(|j| f[j][orders(j)]).product() };
        let value = product(&|_| 0);
        let grad = (0..d).map(|a| product(&|j| usize::from(j == a))).collect();
        let mut hess = DMatrix::zeros(d, d);
        for a in 0..d {
            for b in a..d {
                let v = if a == b {
                    product(&|j| if j == a { 2 } else { 0 })
                } else {
                    product(&|j| usize::from(j == a || j == b))
                };
                hess[(a, b)] = v;
                hess[(b, a)] = v;
            }
        }
        BumpJet { value, grad, hess }
    }
}

/// Derivative order of the axis-`j` factor in `∂_α ∂_β f`.
pub(crate) fn axis_order(j: usize, alpha: usize, beta: usize) -> usize {
    usize::from(j == alpha) + usize::from(j == beta)
}

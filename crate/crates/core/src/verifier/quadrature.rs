//! Quadrature rules for bump-weighted integrals.
//!
//! The bump profile `exp(−1/(1−t²))` has steep derivative structure near the
//! ends of its support, so plain equispaced rules need many points per
//! half-width. Under `t = tanh(u)` the profile becomes `exp(−cosh²u)`, entire
//! and doubly-exponentially decaying, and the rectangle rule in `u` converges
//! geometrically.

use std::f64::consts::PI;

use super::bump::profile;

/// Truncation of the `u` axis; `exp(−cosh²3) ≈ 1e−44`.
const TANH_RULE_HALF_RANGE: f64 = 3.0;
/// Truncation used inside grid cells.
const CELL_HALF_RANGE: f64 = 4.0;
const PANEL_LENGTH: f64 = 0.25;
const GAUSS_POINTS: usize = 20;

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub(crate) fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Rectangle rule in `u` with `k = c + w·tanh(u)`: `resolution` nodes on the
/// support `[c − w, c + w]` and their weights (including the Jacobian).
pub(crate) fn tanh_rule(center: f64, width: f64, resolution: usize) -> Vec<(f64, f64)> {
    let step = 2.0 * TANH_RULE_HALF_RANGE / resolution as f64;
    (0..resolution)
        .map(|i| {
            let u = -TANH_RULE_HALF_RANGE + (i as f64 + 0.5) * step;
            let sech = 1.0 / u.cosh();
            (center + width * u.tanh(), step * width * sech * sech)
        })
        .collect()
}

/// Weights `W[n] = ∫ g(x) ℓ_n(x) dx` for one axis, where `ℓ_n` is the periodic
/// piecewise-cubic Lagrange basis on the grid and `g` is the bump profile of
/// the given derivative order (scaled by `w^{-order}`).
///
/// `Σ_n ψ_n W[n]` then integrates the cubic interpolant of the samples `ψ_n`
/// against `g` exactly up to the sub-quadrature error, and `Σ_n W[n] = ∫g`.
pub(crate) fn interpolation_weights(
    n_per_axis: usize,
    offset: f64,
    center: f64,
    width: f64,
    order: usize,
) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(GAUSS_POINTS);
    let n = n_per_axis as i64;
    let h = 1.0 / n_per_axis as f64;
    let node = |i: i64| (i as f64 + offset) * h - 0.5;
    let scale = width.powi(-(order as i32));
    let mut weights = vec![0.0; n_per_axis];

    let (lo, hi) = (center - width, center + width);
    let first = ((lo + 0.5) / h - offset).floor() as i64 - 1;
    let last = ((hi + 0.5) / h - offset).ceil() as i64 + 1;
    for i in first..=last {
        let (a, b) = (node(i), node(i + 1));
        let ta = ((a - center) / width).max(-1.0);
        let tb = ((b - center) / width).min(1.0);
        if tb <= ta {
            continue;
        }
        let ua = if ta <= -1.0 {
            -CELL_HALF_RANGE
        } else {
            ta.atanh().max(-CELL_HALF_RANGE)
        };
        let ub = if tb >= 1.0 {
            CELL_HALF_RANGE
        } else {
            tb.atanh().min(CELL_HALF_RANGE)
        };
        if ub <= ua {
            continue;
        }
        let stencil = [node(i - 1), a, b, node(i + 2)];
        let mut acc = [0.0; 4];
        let panels = ((ub - ua) / PANEL_LENGTH).ceil().max(1.0) as usize;
        let plen = (ub - ua) / panels as f64;
        for p in 0..panels {
            let p0 = ua + p as f64 * plen;
            for (xi, wi) in gx.iter().zip(&gw) {
                let u = p0 + (xi + 1.0) * 0.5 * plen;
                let sech = 1.0 / u.cosh();
                let s = sech * sech;
                let t = u.tanh();
                let g = profile(t, s)[order] * scale;
                if g == 0.0 {
                    continue;
                }
                let x = center + width * t;
                let jac = wi * 0.5 * plen * width * s;
                for (m, slot) in acc.iter_mut().enumerate() {
                    let mut lm = 1.0;
                    for (q, xq) in stencil.iter().enumerate() {
                        if q != m {
                            lm *= (x - xq) / (stencil[m] - xq);
                        }
                    }
                    *slot += g * lm * jac;
                }
            }
        }
        for (m, v) in acc.iter().enumerate() {
            weights[(i - 1 + m as i64).rem_euclid(n) as usize] += v;
        }
    }
    weights
}

use serde::{Deserialize, Serialize};

use super::FourierDispersion;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Fraction of grid points where `|det Hess ω|` falls below each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyProfile {
    pub deltas: Vec<f64>,
    /// One entry per delta, relative to the points that were not excluded.
    pub fractions: Vec<f64>,
    /// Fraction of all grid points skipped because `ω < eps0` there.
    pub excluded_fraction: f64,
}

pub fn degeneracy_profile(
    disp: &FourierDispersion,
    grid: &GridSpec,
    deltas: &[f64],
    eps0: f64,
) -> Result<DegeneracyProfile> {
    disp.check_grid(grid)?;
    if deltas.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(Error::InvalidArgument(
            "degeneracy thresholds must be positive".into(),
        ));
    }
    if deltas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "degeneracy thresholds must be ascending".into(),
        ));
    }

    let mut dets = Vec::with_capacity(grid.len());
    let mut excluded = 0usize;
    for k in grid.points() {
        match disp.hessian_det(&k, eps0) {
            Ok(det) => dets.push(det.abs()),
            Err(Error::NearSingularSet { .. }) => excluded += 1,
            Err(e) => return Err(e),
        }
    }
    dets.sort_by(f64::total_cmp);
    let kept = dets.len();
    let fractions = deltas
        .iter()
        .map(|&delta| {
            if kept == 0 {
                0.0
            } else {
                dets.partition_point(|&x| x < delta) as f64 / kept as f64
            }
        })
        .collect();
    Ok(DegeneracyProfile {
        deltas: deltas.to_vec(),
        fractions,
        excluded_fraction: excluded as f64 / grid.len() as f64,
    })
}

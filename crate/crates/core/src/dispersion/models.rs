use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FourierDispersion;
use crate::error::{Error, Result};

/// Built-in dispersion models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// `ω² = Σ_j 4 sin²(π k_j)`: `γ(0) = 2d`, `γ(±e_j) = −1`. Vanishes at `k = 0`.
    NearestNeighbor,
    /// Nearest-neighbour model with `m²` added to `γ(0)`, so `ω(0) = m`.
    Gapped(f64),
    /// `ω ≡ c`, i.e. `γ(0) = c²`.
    Constant(f64),
}

impl Model {
    pub fn build(&self, dim: usize) -> Result<FourierDispersion> {
        let d = dim as f64;
        let mut entries = Vec::with_capacity(2 * dim + 1);
        match *self {
            Model::NearestNeighbor | Model::Gapped(_) => {
                let mass_sq = match *self {
                    Model::Gapped(m) => m * m,
                    _ => 0.0,
                };
                entries.push((vec![0; dim], 2.0 * d + mass_sq));
                for j in 0..dim {
                    let mut n = vec![0i64; dim];
                    n[j] = 1;
                    entries.push((n, -1.0));
                }
            }
            Model::Constant(c) => entries.push((vec![0; dim], c * c)),
        }
        FourierDispersion::new(dim, entries)
    }
}

impl FromStr for Model {
    type Err = Error;

    /// Accepts `nn`, `nn-gap(m)` and `constant(c)`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "nn" {
            return Ok(Model::NearestNeighbor);
        }
        let parse_arg = |prefix: &str| -> Option<Result<f64>> {
            let inner = s
                .strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?;
            Some(inner.trim().parse::<f64>().map_err(|_| {
                Error::MalformedCoefficients(format!(
                    "model `{s}`: cannot parse `{inner}` as a number"
                ))
            }))
        };
        if let Some(m) = parse_arg("nn-gap") {
            let m = m?;
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::MalformedCoefficients(format!(
                    "model `{s}`: gap must be >= 0"
                )));
            }
            return Ok(Model::Gapped(m));
        }
        if let Some(c) = parse_arg("constant") {
            let c = c?;
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::MalformedCoefficients(format!(
                    "model `{s}`: constant must be >= 0"
                )));
            }
            return Ok(Model::Constant(c));
        }
        Err(Error::MalformedCoefficients(format!(
            "unknown model `{s}` (expected nn, nn-gap(m), constant(c) or a coefficient file)"
        )))
    }
}

/// On-disk coefficient file: `{"dim": d, "coeffs": [{"n": [..], "gamma": x}, ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub dim: usize,
    pub coeffs: Vec<CoefficientEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub n: Vec<i64>,
    pub gamma: f64,
}

impl CoefficientFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::MalformedCoefficients(format!("coefficient file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn build(&self) -> Result<FourierDispersion> {
        FourierDispersion::new(self.dim, self.coeffs.iter().map(|c| (c.n.clone(), c.gamma)))
    }
}

impl From<&FourierDispersion> for CoefficientFile {
    fn from(disp: &FourierDispersion) -> Self {
        Self {
            dim: disp.dim(),
            coeffs: disp
                .coefficients()
                .iter()
                .map(|(n, &gamma)| CoefficientEntry {
                    n: n.clone(),
                    gamma,
                })
                .collect(),
        }
    }
}

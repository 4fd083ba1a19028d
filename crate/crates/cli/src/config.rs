use std::path::{Path, PathBuf};

use collinv::dispersion::{CoefficientFile, DEFAULT_EPS0};
use collinv::verifier::{DEFAULT_KAPPA_MAX, DEFAULT_MARGIN};
use collinv::{Error as CoreError, FourierDispersion, GridSpec, Model};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Caps {
    pub max_collisions: usize,
    pub dense_max_cols: usize,
    pub max_iterations: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self {
            max_collisions: 100_000_000,
            dense_max_cols: 4096,
            max_iterations: 2000,
        }
    }
}

/// Everything a run depends on. Absent tolerances are filled by the auto rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Built-in model name or path to a coefficient file.
    pub model: String,
    pub dim: usize,
    pub n_per_axis: usize,
    pub offset: f64,
    pub epsilon_e: Option<f64>,
    pub sigma_tol: Option<f64>,
    pub eps0: f64,
    pub seed: u64,
    pub bump_family_size: usize,
    /// Not part of reports or the config hash, so runs into different
    /// directories stay byte-identical.
    #[serde(skip_serializing)]
    pub output_dir: PathBuf,
    pub deltas: Vec<f64>,
    pub kappa_max: f64,
    pub margin: f64,
    pub caps: Caps,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: "nn".into(),
            dim: 2,
            n_per_axis: 12,
            offset: GridSpec::DEFAULT_OFFSET,
            epsilon_e: None,
            sigma_tol: None,
            eps0: DEFAULT_EPS0,
            seed: 42,
            bump_family_size: 10,
            output_dir: PathBuf::from("out"),
            deltas: vec![1e-8, 1e-6, 1e-4, 1e-2, 1.0],
            kappa_max: DEFAULT_KAPPA_MAX,
            margin: DEFAULT_MARGIN,
            caps: Caps::default(),
        }
    }
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub model: Option<String>,
    pub dim: Option<usize>,
    pub n_per_axis: Option<usize>,
    pub offset: Option<f64>,
    pub epsilon_e: Option<f64>,
    pub sigma_tol: Option<f64>,
    pub seed: Option<u64>,
    pub bump_family_size: Option<usize>,
    pub output_dir: Option<PathBuf>,
    pub max_collisions: Option<usize>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>, overrides: &Overrides) -> CliResult<Self> {
        let mut cfg = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        let o = overrides.clone();
        if let Some(v) = o.model {
            cfg.model = v;
        }
        if let Some(v) = o.dim {
            cfg.dim = v;
        }
        if let Some(v) = o.n_per_axis {
            cfg.n_per_axis = v;
        }
        if let Some(v) = o.offset {
            cfg.offset = v;
        }
        if o.epsilon_e.is_some() {
            cfg.epsilon_e = o.epsilon_e;
        }
        if o.sigma_tol.is_some() {
            cfg.sigma_tol = o.sigma_tol;
        }
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = o.bump_family_size {
            cfg.bump_family_size = v;
        }
        if let Some(v) = o.output_dir {
            cfg.output_dir = v;
        }
        if let Some(v) = o.max_collisions {
            cfg.caps.max_collisions = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.dim == 0 {
            return bad("dim must be positive".into());
        }
        if self.n_per_axis == 0 {
            return bad("n_per_axis must be positive".into());
        }
        if !(0.0..1.0).contains(&self.offset) {
            return bad(format!("offset must lie in [0, 1), got {}", self.offset));
        }
        if let Some(e) = self.epsilon_e {
            if !(e.is_finite() && e >= 0.0) {
                return bad(format!("epsilon_e must be >= 0, got {e}"));
            }
        }
        if let Some(s) = self.sigma_tol {
            if !(s.is_finite() && s >= 0.0) {
                return bad(format!("sigma_tol must be >= 0, got {s}"));
            }
        }
        if !(self.eps0.is_finite() && self.eps0 > 0.0) {
            return bad(format!("eps0 must be positive, got {}", self.eps0));
        }
        if self.bump_family_size < collinv::verifier::MIN_FAMILY_SIZE {
            return bad(format!(
                "bump_family_size must be at least {}, got {}",
                collinv::verifier::MIN_FAMILY_SIZE,
                self.bump_family_size
            ));
        }
        if self.deltas.is_empty()
            || self.deltas.iter().any(|d| !(d.is_finite() && *d > 0.0))
            || self.deltas.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("deltas must be positive and strictly ascending".into());
        }
        if !(self.kappa_max.is_finite() && self.kappa_max >= 1.0) {
            return bad(format!("kappa_max must be >= 1, got {}", self.kappa_max));
        }
        if !(self.margin.is_finite() && self.margin >= 0.0) {
            return bad(format!("margin must be >= 0, got {}", self.margin));
        }
        if self.caps.max_collisions == 0 || self.caps.max_iterations == 0 {
            return bad("caps must be positive".into());
        }
        Ok(())
    }

    pub fn grid(&self) -> CliResult<GridSpec> {
        GridSpec::new(self.dim, self.n_per_axis, self.offset)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Built-in names first; anything else is read as a coefficient file.
    pub fn dispersion(&self) -> CliResult<FourierDispersion> {
        let model_err = |e: CoreError| CliError::Model(e.to_string());
        match self.model.parse::<Model>() {
            Ok(m) => m.build(self.dim).map_err(model_err),
            Err(parse_err) => {
                let path = Path::new(&self.model);
                if !path.exists() {
                    return Err(model_err(parse_err));
                }
                let file = CoefficientFile::load(path).map_err(model_err)?;
                if file.dim != self.dim {
                    return Err(CliError::Model(format!(
                        "{}: coefficient file is {}-dimensional but dim = {}",
                        path.display(),
                        file.dim,
                        self.dim
                    )));
                }
                file.build().map_err(model_err)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"dim": 2, "n": 8}"#).unwrap_err();
        assert!(err.to_string().contains("unknown field"));
    }

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"n_per_axis": 8, "seed": 1}"#).unwrap();
        let cfg = RunConfig::load(
            Some(&path),
            &Overrides {
                seed: Some(9),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!((cfg.n_per_axis, cfg.seed, cfg.dim), (8, 9, 2));
    }

    #[test]
    fn validation_failures() {
        for text in [
            r#"{"dim": 0}"#,
            r#"{"offset": 1.5}"#,
            r#"{"deltas": [1e-2, 1e-4]}"#,
            r#"{"bump_family_size": 2}"#,
        ] {
            let cfg: RunConfig = serde_json::from_str(text).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn unknown_model_is_a_model_error() {
        let cfg = RunConfig {
            model: "phonon-magic".into(),
            ..Default::default()
        };
        assert!(matches!(cfg.dispersion(), Err(CliError::Model(_))));
    }
}

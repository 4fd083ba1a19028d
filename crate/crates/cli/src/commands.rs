use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use collinv::collision::triple_index_shift;
use collinv::io::{
    to_json_string, write_columns_csv, write_grid_function_csv, write_matrix_market,
    write_quadruples_csv,
};
use collinv::nullspace::BasisSidecar;
use collinv::verifier::VerificationReport;
use collinv::{
    build_constraint_matrix, check_nonconserving_reduction, compare_to_affine_span,
    compute_invariant_basis, default_epsilon_e, default_reduction_epsilon_e, default_sigma_tol,
    degeneracy_profile, enumerate_3to1, enumerate_quadruples, residual_stats, verify_candidate,
    Admissibility, BasisMethod, BasisOptions, BumpFamily, BumpTestFunction, EnumerationOptions,
    Error as CoreError, FamilyOptions, FourierDispersion, GridFunction, GridSpec, ResidualStats,
    SubspaceComparison,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// A candidate invariant `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Candidate {
    Affine { a: f64, c: f64 },
    Omegasq,
    File { path: PathBuf },
}

impl Candidate {
    /// Samples on the grid of `omega`. Files are CSV with a header row; the
    /// last column holds the values in row-major grid order.
    pub fn resolve(&self, omega: &GridFunction) -> CliResult<GridFunction> {
        match self {
            Candidate::Affine { a, c } => Ok(omega.map(|w| a * w + c)?),
            Candidate::Omegasq => Ok(omega.map(|w| w * w)?),
            Candidate::File { path } => {
                let cfg =
                    |m: String| CliError::Config(format!("candidate {}: {m}", path.display()));
                let mut reader = csv::Reader::from_path(path).map_err(|e| cfg(e.to_string()))?;
                let mut values = Vec::new();
                for (i, rec) in reader.records().enumerate() {
                    let rec = rec.map_err(|e| cfg(e.to_string()))?;
                    let field = rec
                        .iter()
                        .next_back()
                        .ok_or_else(|| cfg(format!("row {} is empty", i + 1)))?;
                    values.push(
                        field.trim().parse::<f64>().map_err(|_| {
                            cfg(format!("row {}: `{field}` is not a number", i + 1))
                        })?,
                    );
                }
                GridFunction::new(*omega.spec(), values).map_err(|e| cfg(e.to_string()))
            }
        }
    }
}

/// Output directory plus the list of files written to it.
struct Output {
    dir: PathBuf,
    files: Vec<String>,
}

impl Output {
    fn new(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        self.files.push(name.to_string());
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let text = to_json_string(value)?;
        let mut w = self.create(name)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(())
    }

    fn finish(mut self, command: &str, cfg: &RunConfig) -> CliResult<()> {
        let config_json = serde_json::to_string(cfg).expect("config serializes");
        let manifest = Manifest {
            tool: "collinv",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256: hex::encode(Sha256::digest(config_json.as_bytes())),
            files: self.files.clone(),
        };
        self.json("manifest.json", &manifest)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config_sha256: String,
    files: Vec<String>,
}

fn setup(cfg: &RunConfig) -> CliResult<(FourierDispersion, GridSpec, GridFunction)> {
    let grid = cfg.grid()?;
    let disp = cfg.dispersion()?;
    let omega = disp
        .sample(&grid)
        .map_err(|e| CliError::Model(e.to_string()))?;
    Ok((disp, grid, omega))
}

/// The config as run: auto tolerances filled in.
fn resolved(cfg: &RunConfig, epsilon_e: Option<f64>, sigma_tol: Option<f64>) -> RunConfig {
    let mut out = cfg.clone();
    out.epsilon_e = epsilon_e.or(cfg.epsilon_e);
    out.sigma_tol = sigma_tol.or(cfg.sigma_tol);
    out
}

#[derive(Serialize)]
struct DegeneracyReport<'a> {
    config: RunConfig,
    deltas: &'a [f64],
    fractions: &'a [f64],
    excluded_fraction: f64,
    omega_min: f64,
    omega_max: f64,
}

pub fn dispersion(cfg: &RunConfig) -> CliResult<()> {
    let (disp, grid, omega) = setup(cfg)?;
    let mut out = Output::new(&cfg.output_dir)?;

    let mut w = out.create("omega.csv")?;
    write_grid_function_csv(&omega, "omega", &mut w)?;
    w.flush()?;

    let mut w = out.create("hessdet.csv")?;
    let axes: Vec<String> = (1..=grid.dim).map(|a| format!("k{a}")).collect();
    writeln!(w, "index,{},hessdet", axes.join(","))?;
    for (i, k) in grid.points().enumerate() {
        let coords: Vec<String> = k.iter().map(|x| collinv::io::fmt_f64(*x)).collect();
        // points near the singular set are left blank
        let det = match disp.hessian_det(&k, cfg.eps0) {
            Ok(v) => collinv::io::fmt_f64(v),
            Err(CoreError::NearSingularSet { .. }) => String::new(),
            Err(e) => return Err(e.into()),
        };
        writeln!(w, "{i},{},{det}", coords.join(","))?;
    }
    w.flush()?;

    let prof = degeneracy_profile(&disp, &grid, &cfg.deltas, cfg.eps0)?;
    out.json(
        "degeneracy.json",
        &DegeneracyReport {
            config: cfg.clone(),
            deltas: &prof.deltas,
            fractions: &prof.fractions,
            excluded_fraction: prof.excluded_fraction,
            omega_min: omega.min(),
            omega_max: omega.max(),
        },
    )?;
    out.finish("dispersion", cfg)
}

#[derive(Serialize)]
struct NullspaceReport {
    config: RunConfig,
    quadruple_count: usize,
    rows: usize,
    cols: usize,
    empty_constraint_set: bool,
    method: Option<BasisMethod>,
    dimension: usize,
    singular_values: Vec<f64>,
    spectral_gap: Option<f64>,
    contains_constant: Option<f64>,
    contains_omega: Option<f64>,
    comparison: Option<SubspaceComparison>,
    omega_residual: ResidualStats,
}

pub fn nullspace(cfg: &RunConfig) -> CliResult<()> {
    let (disp, grid, omega) = setup(cfg)?;
    let eps = match cfg.epsilon_e {
        Some(e) => e,
        None => default_epsilon_e(&disp, &grid, cfg.eps0)?,
    };
    let opts = EnumerationOptions {
        epsilon_e: eps,
        max_collisions: cfg.caps.max_collisions,
    };
    let qs = enumerate_quadruples(&disp, &grid, &opts)?;
    let m = build_constraint_matrix(&qs);
    let mut out = Output::new(&cfg.output_dir)?;

    let mut w = out.create("quadruples.csv")?;
    write_quadruples_csv(&qs, &mut w)?;
    w.flush()?;
    let mut w = out.create("constraints.mtx")?;
    write_matrix_market(&m, &mut w)?;
    w.flush()?;

    let omega_residual = residual_stats(&omega, &qs)?;
    let sigma_tol = cfg
        .sigma_tol
        .unwrap_or_else(|| default_sigma_tol(eps, m.rows(), &omega));
    let config = resolved(cfg, Some(eps), Some(sigma_tol));
    let report = if qs.is_empty() {
        // no constraints: every grid function is invariant
        let mut w = out.create("basis.csv")?;
        write_columns_csv(&[], 0, &mut w)?;
        w.flush()?;
        out.json(
            "basis.json",
            &BasisSidecar {
                singular_values: vec![],
                sigma_tol,
                dimension: grid.len(),
            },
        )?;
        NullspaceReport {
            config,
            quadruple_count: 0,
            rows: 0,
            cols: grid.len(),
            empty_constraint_set: true,
            method: None,
            dimension: grid.len(),
            singular_values: vec![],
            spectral_gap: None,
            contains_constant: Some(1.0),
            contains_omega: Some(1.0),
            comparison: None,
            omega_residual,
        }
    } else {
        let opts = BasisOptions {
            dense_max_cols: cfg.caps.dense_max_cols,
            max_iterations: cfg.caps.max_iterations,
            seed: cfg.seed,
            ..BasisOptions::new(sigma_tol)
        };
        let basis = compute_invariant_basis(&m, &opts)?;
        let cmp = compare_to_affine_span(&basis, &omega)?;
        let mut w = out.create("basis.csv")?;
        write_columns_csv(&basis.vectors, grid.len(), &mut w)?;
        w.flush()?;
        out.json("basis.json", &BasisSidecar::from(&basis))?;
        NullspaceReport {
            config,
            quadruple_count: qs.len(),
            rows: m.rows(),
            cols: m.cols(),
            empty_constraint_set: false,
            method: Some(basis.method),
            dimension: basis.dimension(),
            singular_values: basis.singular_values.clone(),
            spectral_gap: basis.spectral_gap,
            contains_constant: Some(cmp.contains_constant),
            contains_omega: Some(cmp.contains_omega),
            comparison: Some(cmp),
            omega_residual,
        }
    };
    out.json("nullspace.json", &report)?;
    out.finish("nullspace", cfg)
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: RunConfig,
    candidate: &'a Candidate,
    #[serde(flatten)]
    result: VerificationReport,
    bumps: &'a [BumpTestFunction],
    draws: usize,
}

pub fn verify(cfg: &RunConfig, candidate: &Candidate) -> CliResult<()> {
    let (disp, grid, omega) = setup(cfg)?;
    let psi = candidate.resolve(&omega)?;
    let adm = Admissibility::from_dispersion(&disp, &grid, cfg.eps0, cfg.margin)?;
    let opts = FamilyOptions {
        size: cfg.bump_family_size,
        seed: cfg.seed,
        kappa_max: cfg.kappa_max,
        ..FamilyOptions::default()
    };
    let family = BumpFamily::generate(&omega, &adm, &opts)?;
    let result = verify_candidate(&psi, &omega, &family.members, &adm, cfg.kappa_max)?;
    let mut out = Output::new(&cfg.output_dir)?;
    out.json(
        "verification.json",
        &VerifyReport {
            config: cfg.clone(),
            candidate,
            result,
            bumps: &family.members,
            draws: family.draws,
        },
    )?;
    out.finish("verify", cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReductionVerdict {
    Inconclusive,
    CZero,
    CNonzero,
}

#[derive(Serialize)]
struct ReductionReport<'a> {
    config: RunConfig,
    candidate: &'a Candidate,
    epsilon_e: f64,
    mean_residual: f64,
    max_abs_residual: f64,
    count: usize,
    inferred_c: f64,
    verdict: ReductionVerdict,
}

pub fn reduce(cfg: &RunConfig, candidate: &Candidate) -> CliResult<()> {
    let (disp, grid, omega) = setup(cfg)?;
    triple_index_shift(&grid).map_err(|e| CliError::Config(e.to_string()))?;
    let psi = candidate.resolve(&omega)?;
    let eps = match cfg.epsilon_e {
        Some(e) => e,
        None => default_reduction_epsilon_e(&disp, &grid, cfg.eps0)?,
    };
    let opts = EnumerationOptions {
        epsilon_e: eps,
        max_collisions: cfg.caps.max_collisions,
    };
    let ts = enumerate_3to1(&disp, &grid, &opts)?;
    let stats = check_nonconserving_reduction(&psi, &ts)?;
    let inferred_c = stats.inferred_c();
    // the energy slack alone can shift the mean by up to εE/2
    let verdict = if stats.empty {
        ReductionVerdict::Inconclusive
    } else if inferred_c.abs() <= eps {
        ReductionVerdict::CZero
    } else {
        ReductionVerdict::CNonzero
    };
    let mut out = Output::new(&cfg.output_dir)?;
    out.json(
        "reduction.json",
        &ReductionReport {
            config: resolved(cfg, Some(eps), None),
            candidate,
            epsilon_e: eps,
            mean_residual: stats.mean_residual,
            max_abs_residual: stats.max_abs_residual,
            count: stats.count,
            inferred_c,
            verdict,
        },
    )?;
    out.finish("reduce", cfg)
}

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::Candidate;
use config::{Overrides, RunConfig};
use error::{exit, CliError, CliResult};

/// Discover and verify collisional invariants of lattice phonon dispersions.
#[derive(Parser)]
#[command(name = "collinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample ω, det Hess ω and the degeneracy profile.
    Dispersion(Common),
    /// Enumerate collisions and extract the near-null space of the constraints.
    Nullspace(Common),
    /// Check a candidate with the moment-matrix verifier.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        candidate: CandidateArgs,
    },
    /// Evaluate a candidate on 3↔1 processes.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        candidate: CandidateArgs,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// nn, nn-gap(m), constant(c) or a coefficient file.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Grid points per axis.
    #[arg(long = "n")]
    n: Option<usize>,
    #[arg(long)]
    offset: Option<f64>,
    #[arg(long = "epsilon-e")]
    epsilon_e: Option<f64>,
    #[arg(long = "sigma-tol")]
    sigma_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "bump-family-size")]
    bump_family_size: Option<usize>,
    #[arg(long = "max-collisions")]
    max_collisions: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CandidateKind {
    Affine,
    Omegasq,
    File,
}

#[derive(Args)]
struct CandidateArgs {
    #[arg(long, value_enum)]
    candidate: CandidateKind,
    /// Slope for an affine candidate.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    a: f64,
    /// Offset for an affine candidate.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c: f64,
    /// CSV file for a file candidate; its last column holds the values.
    #[arg(long = "candidate-file")]
    candidate_file: Option<PathBuf>,
}

impl CandidateArgs {
    fn candidate(&self) -> CliResult<Candidate> {
        Ok(match self.candidate {
            CandidateKind::Affine => Candidate::Affine {
                a: self.a,
                c: self.c,
            },
            CandidateKind::Omegasq => Candidate::Omegasq,
            CandidateKind::File => Candidate::File {
                path: self.candidate_file.clone().ok_or_else(|| {
                    CliError::Config("--candidate file needs --candidate-file".into())
                })?,
            },
        })
    }
}

impl Common {
    fn load(&self) -> CliResult<RunConfig> {
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(CliError::Config("--threads must be positive".into()));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        let overrides = Overrides {
            model: self.model.clone(),
            dim: self.dim,
            n_per_axis: self.n,
            offset: self.offset,
            epsilon_e: self.epsilon_e,
            sigma_tol: self.sigma_tol,
            seed: self.seed,
            bump_family_size: self.bump_family_size,
            output_dir: self.out.clone(),
            max_collisions: self.max_collisions,
        };
        RunConfig::load(self.config.as_deref(), &overrides)
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Dispersion(c) => commands::dispersion(&c.load()?),
        Command::Nullspace(c) => commands::nullspace(&c.load()?),
        Command::Verify { common, candidate } => {
            commands::verify(&common.load()?, &candidate.candidate()?)
        }
        Command::Reduce { common, candidate } => {
            commands::reduce(&common.load()?, &candidate.candidate()?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::CONFIG
            } else {
                exit::OK
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("collinv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

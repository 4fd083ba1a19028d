use std::fmt;

use collinv::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 2;
    pub const MODEL: u8 = 3;
    pub const CAPACITY: u8 = 4;
    pub const CONVERGENCE: u8 = 5;
    pub const ADMISSIBILITY: u8 = 6;
}

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Model(String),
    Core(CoreError),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Model(_) => exit::MODEL,
            CliError::Io(_) => exit::CONFIG,
            CliError::Core(e) => match e {
                CoreError::MalformedCoefficients(_) | CoreError::InvalidDispersion { .. } => {
                    exit::MODEL
                }
                CoreError::CapacityExceeded { .. } => exit::CAPACITY,
                CoreError::ConvergenceFailure { .. } => exit::CONVERGENCE,
                CoreError::InsufficientTestFunctions { .. }
                | CoreError::SupportViolation(_)
                | CoreError::IllConditionedB { .. } => exit::ADMISSIBILITY,
                CoreError::InvalidArgument(_) | CoreError::GridMismatch(_) => exit::CONFIG,
                CoreError::NearSingularSet { .. } | CoreError::EmptyConstraintSet => exit::MODEL,
                CoreError::Io(_) | CoreError::Json(_) => exit::CONFIG,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Model(m) => write!(f, "model error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;

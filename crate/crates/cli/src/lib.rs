//! Pipeline driver for strip embedding jobs: plan the partition, solve the
//! embeddings, export cutting patterns and strain diagnostics, and validate
//! the breadth-scaling laws.

pub mod config;
pub mod pipeline;

pub use config::JobConfig;

/// Exit codes: 0 ok, 2 plan threshold exceeded, 64 usage/config,
/// 66 missing input, 70 solver failure.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    MissingInput(String),
    Solver(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "config error: {m}"),
            CliError::MissingInput(m) => write!(f, "missing input: {m}"),
            CliError::Solver(m) => write!(f, "solver failure: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::MissingInput(_) => 66,
            CliError::Solver(_) => 70,
            CliError::Io(_) => 74,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

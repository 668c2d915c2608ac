use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("topology must be connected")]
    Disconnected,

    #[error("diffusion depth Q = {q} is below the graph diameter {diameter}; the diffusion step requires Q >= D(G)")]
    DiffusionTooShallow { q: usize, diameter: usize },

    #[error(
        "step sizes mu = {mu}, nu = {nu} violate mu*(1+4*nu) <= 1 \
         (required for 0 <= mu*G_k <= I); got mu*(1+4*nu) = {product}"
    )]
    StepSizes { mu: f64, nu: f64, product: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("regressor overflow at sensor {sensor}, step {step}: |component| exceeds {limit:e}")]
    HorizonOverflow { sensor: usize, step: usize, limit: f64 },

    #[error("run {run}: {source}")]
    Run { run: usize, source: Box<Error> },

    #[error("dense operator of size {size} exceeds the cap of {cap}")]
    OperatorCap { size: usize, cap: usize },

    #[error("eigensolver did not converge: {0}")]
    Eigensolver(String),

    #[error("config {path}: line {line}: {message}")]
    Config { path: String, line: usize, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
}

impl Error {
    /// Validation errors are caused by bad inputs or configuration; everything
    /// else happened while running.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Invalid(_)
            | Error::Dimension(_)
            | Error::Disconnected
            | Error::DiffusionTooShallow { .. }
            | Error::StepSizes { .. }
            | Error::Config { .. }
            | Error::Parse(_)
            | Error::OperatorCap { .. } => true,
            Error::Run { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

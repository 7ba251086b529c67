use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Crate-wide error type. `category` gives a stable machine-readable tag
/// for CLI exit reporting.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),

    #[error("config does not match space: {0}")]
    ConfigMismatch(String),

    #[error("epoch {epoch} out of range 1..={z_max}")]
    EpochOutOfRange { epoch: usize, z_max: usize },

    #[error("seed {seed} out of range (n_seeds = {n_seeds})")]
    SeedOutOfRange { seed: u64, n_seeds: u64 },

    #[error("curve table, row {row}: {message}")]
    TableFormat { row: usize, message: String },

    #[error("curve table: {0}")]
    TableStructure(String),

    #[error("no stored curve for config {config_id:?}, seed {seed}, epoch {epoch}")]
    MissingCurve {
        config_id: String,
        seed: u64,
        epoch: usize,
    },

    #[error("curve fit needs at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("curve fit failed: {0}")]
    FitFailure(String),

    #[error("degenerate curve model input: {0}")]
    DegenerateModel(String),

    #[error("invalid run config: {0}")]
    InvalidRunConfig(String),

    #[error("engine error on trial {trial}: {message}")]
    Engine { trial: usize, message: String },

    #[error("event log: {0}")]
    EventLog(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable category tag for machine-readable CLI error output.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidSpace(_) | Error::InvalidSpec(_) | Error::InvalidRunConfig(_) => "config",
            Error::ConfigMismatch(_)
            | Error::EpochOutOfRange { .. }
            | Error::SeedOutOfRange { .. }
            | Error::MissingCurve { .. } => "benchmark",
            Error::TableFormat { .. } | Error::TableStructure(_) => "format",
            Error::TooFewObservations { .. } | Error::FitFailure(_) | Error::DegenerateModel(_) => {
                "fit"
            }
            Error::Engine { .. } | Error::EventLog(_) => "engine",
            Error::Io(_) => "io",
        }
    }
}

//! Configuration, run artifacts and the acceptance suite for the `tipbeam` command.

pub mod config;
pub mod run;
pub mod suite;

use run::ValidationOutcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] config::ConfigError),
    #[error("validation failed: {}", serde_json::to_string(.0).unwrap_or_default())]
    Validation(Box<ValidationOutcome>),
    #[error("numerical failure: {0}")]
    Numerical(#[from] tipbeam::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Validation(_) => EXIT_CONFIG,
            _ => EXIT_NUMERICAL,
        }
    }
}

//! Reproduction front-end: configuration, sweeps over the momentum coupling,
//! oracle calibration and CSV output.

pub mod commands;
pub mod config;
pub mod output;
pub mod pipeline;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Numerical {
        context: String,
        #[source]
        source: qbm_core::Error,
    },
    #[error("calibration failed: {0}")]
    Calibration(String),
}

impl CliError {
    pub fn numerical(context: impl Into<String>, source: qbm_core::Error) -> Self {
        CliError::Numerical { context: context.into(), source }
    }

    /// Process exit status: 2 configuration, 3 numerical, 4 calibration.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Calibration(_) => 4,
        }
    }
}

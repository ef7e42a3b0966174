//! Series synthesis, Monte-Carlo harness, file formats and command line for
//! critical moment order estimation. Numerical work lives in
//! `momentgate-core`; this crate adds everything that needs `std`.

pub mod cli;
pub mod config;
pub mod format;
pub mod montecarlo;
pub mod synth;

pub use config::{ExperimentConfig, ExperimentKind, KChoice};
pub use format::{OutputFormat, Table};
pub use montecarlo::McReport;
pub use synth::{MatchMode, SeriesSpec, Synthesizer};

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error(transparent)]
    Core(#[from] momentgate_core::Error),
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl AppError {
    /// 2 on usage errors, 3 on numerical failures, 4 on data or IO errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Core(e) if e.is_numerical() => 3,
            AppError::Core(_) | AppError::Usage(_) => 2,
            AppError::Data(_) | AppError::Io(_) => 4,
        }
    }
}

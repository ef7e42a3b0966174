use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("{what} = {value} is outside the domain")]
    Domain { what: &'static str, value: f64 },
    #[error("solver did not converge: {0}")]
    Convergence(&'static str),
    #[error("no saddle point for q = {q}")]
    NoRoot { q: f64 },
    #[error("degenerate saddle at q = {q}: psi'' = {curvature}")]
    DegenerateSaddle { q: f64, curvature: f64 },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("Omega_k = {omega} is not positive")]
    NonPositiveOmega { omega: f64 },
    #[error("regression is degenerate (all order statistics equal)")]
    DegenerateRegression,
    #[error("only {found} positive order statistics, need at least 2")]
    InsufficientPositiveValues { found: usize },
    #[error("circulant embedding clipped {clipped_fraction} of the spectral mass")]
    Embedding { clipped_fraction: f64 },
    #[error("correlation length integral diverges")]
    Divergent,
    #[error("sieve kept {found} points, need {needed}")]
    InsufficientSievedPoints { found: usize, needed: usize },
}

impl Error {
    /// True for failures of numerical procedures (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        !matches!(self, Error::Argument(_) | Error::Domain { .. })
    }
}

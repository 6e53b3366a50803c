use thiserror::Error;

/// Errors raised by the library. Check failures are reported through
/// report structs, not through this type.
#[derive(Debug, Error)]
pub enum HtypeError {
    #[error("inadmissible pair (n={n}, m={m}): n must be a positive multiple of d(m)={d}")]
    Inadmissible { n: usize, m: usize, d: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("point leaves the chart domain: {0}")]
    OutOfDomain(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("rank-deficient design ({0}); add a site with tau_V != 0 and independent (kappa_H, tau_V)")]
    RankDeficient(String),
    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
    #[error("unknown model id '{0}'")]
    UnknownModel(String),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HtypeError>;

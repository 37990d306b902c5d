use thiserror::Error;

use crate::attack::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid edge ({0}, {1}): {2}")]
    InvalidEdge(usize, usize, &'static str),

    #[error("agent id {id} out of range 1..={n}")]
    AgentOutOfRange { id: usize, n: usize },

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    Asymmetric(f64),

    #[error("matrix or vector has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coupling weight {dbar} outside (0, 1/d_max) = (0, {limit})")]
    DbarOutOfRange { dbar: f64, limit: f64 },

    #[error("communication graph is not connected")]
    Disconnected,

    #[error("invalid time argument: {0}")]
    InvalidTime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("time {t} outside sampled strategy range [{start}, {end}]")]
    OutsideSampledRange { t: f64, start: f64, end: f64 },

    #[error("operation requires a constant (time-invariant) strategy")]
    UnsupportedStrategy,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("consensus conditions do not hold for the unattacked system")]
    NoConsensus,

    #[error("scenario failed validation: {}", format_violations(.0))]
    Validation(Vec<Violation>),

    #[error("n = {n} exceeds the cap of {cap} for {what}")]
    TooLarge { n: usize, cap: usize, what: &'static str },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

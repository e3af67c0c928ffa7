use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Numerical failures carry enough context to reproduce the failing call;
/// I/O failures carry the offending path.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("height {t} is below the Riemann-Siegel floor t_min = {t_min}")]
    HeightTooSmall { t: f64, t_min: f64 },

    #[error("oracle height {t} exceeds the supported range (max {max})")]
    OracleRangeExceeded { t: f64, max: f64 },

    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },

    #[error("argument {y} is outside the domain (must exceed {floor})")]
    DomainError { y: f64, floor: f64 },

    #[error(
        "root solve did not converge after {iterations} iterations (last residual {residual:e})"
    )]
    ConvergenceFailure { iterations: usize, residual: f64 },

    #[error("no root of the reverse-iteration equation in [{lo}, {hi}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("U = {u} exceeds the admissible bound {max} at T = {t}")]
    UTooLarge { u: f64, t: f64, max: f64 },

    #[error("iteration level {k} exceeds k_max = {k_max}")]
    LevelTooLarge { k: usize, k_max: usize },

    #[error("prime counting argument {x} outside [2, {max}]")]
    RangeExceeded { x: f64, max: f64 },

    #[error("function {id} is not admissible on [{t}, {t} + {u}]: {reason}")]
    NotAdmissible {
        id: String,
        t: f64,
        u: f64,
        reason: String,
    },

    #[error("no mean-value crossing found on [{a}, {b}]")]
    NoCrossing { a: f64, b: f64 },

    #[error("node {node} adjacent to a zeta zero (|zeta|^2 = {value:e}) after {retries} retries")]
    DegenerateNode {
        node: f64,
        value: f64,
        retries: usize,
    },

    #[error("closed-form mean of {id} ({closed}) disagrees with quadrature ({quadrature})")]
    MeanMismatch {
        id: String,
        closed: f64,
        quadrature: f64,
    },

    #[error("level list mismatch: {0}")]
    LevelMismatch(String),

    #[error("checkpoint fingerprint mismatch: file has {found}, expected {expected}")]
    FingerprintMismatch { found: String, expected: String },

    #[error("checkpoint store unavailable at {path}: {reason}")]
    StoreUnavailable { path: PathBuf, reason: String },

    #[error("malformed checkpoint table: {0}")]
    MalformedTable(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("report encoding failed: {0}")]
    Encode(String),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input validation rather than the numerics.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            LabError::InvalidConfig(_)
                | LabError::LevelMismatch(_)
                | LabError::UTooLarge { .. }
                | LabError::LevelTooLarge { .. }
                | LabError::InvalidInterval { .. }
                | LabError::NotAdmissible { .. }
        )
    }
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;

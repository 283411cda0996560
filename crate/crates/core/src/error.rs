use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("invalid joint id {joint} (skeleton has {joint_count} joints)")]
    InvalidJoint { joint: usize, joint_count: usize },

    #[error("invalid skeleton: {0}")]
    InvalidSkeleton(String),

    #[error("empty sequence")]
    EmptySequence,

    #[error("frame {frame}: expected {expected} joints, found {found}")]
    InconsistentFrame {
        frame: usize,
        expected: usize,
        found: usize,
    },

    #[error("sequence too short: need at least {needed} frames, got {actual}")]
    TooShort { needed: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown sensor id {0}")]
    UnknownSensor(usize),

    #[error("invalid sensor table: {0}")]
    InvalidSensorTable(String),

    #[error("sensor {0} is not present in the IMU sequence")]
    MissingSensor(usize),

    #[error("no tracked vertex in skeleton for sensor {sensor} (vertex {vertex})")]
    MissingAttachment { sensor: usize, vertex: usize },

    #[error("split: {0}")]
    Split(String),

    #[error("estimator: {0}")]
    Estimator(String),

    #[error("unknown metric `{0}` (valid: sip, angular, positional, mesh, jitter)")]
    UnknownMetric(String),

    #[error("no configurations to evaluate")]
    EmptyEnumeration,

    #[error("results file: {0}")]
    Results(String),

    #[error("config: {0}")]
    Config(String),

    /// Displays only the path; the I/O error is the source.
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::UnknownSensor(_)
                | Error::InvalidSensorTable(_)
                | Error::InvalidSkeleton(_)
                | Error::UnknownMetric(_)
                | Error::Config(_)
                | Error::Parse { .. }
                | Error::Io { .. }
                | Error::InconsistentFrame { .. }
                | Error::EmptySequence
                | Error::Split(_)
        )
    }
}

//! Experiment harness behind the `mlab` binary: configuration, orchestration
//! of per-`eps` runs, persistence and SVG scenes.

pub mod config;
pub mod plot;
pub mod run;
pub mod verify;

use std::fmt;
use std::path::Path;

pub use config::{ExperimentConfig, RhoPolicy, SolverConfig};
pub use run::{run, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    Invariant,
    Config,
    Numerical,
}

impl FailureKind {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Invariant => 1,
            Self::Config => 2,
            Self::Numerical => 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Failure {
    pub kind: FailureKind,
    pub message: String,
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Config,
            message: msg.into(),
        }
    }

    pub fn invariant(msg: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Invariant,
            message: msg.into(),
        }
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Self {
            kind: FailureKind::Numerical,
            message: msg.into(),
        }
    }

    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        Self::numerical(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

impl From<mlab_core::Error> for Failure {
    fn from(e: mlab_core::Error) -> Self {
        match e {
            mlab_core::Error::InvalidParameter(_) => Self::config(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

/// Exit code for a set of failures: invariant violations dominate numerical
/// failures.
pub fn exit_code(failures: &[Failure]) -> i32 {
    let has = |k| failures.iter().any(|f| f.kind == k);
    if has(FailureKind::Config) {
        2
    } else if has(FailureKind::Invariant) {
        1
    } else if has(FailureKind::Numerical) {
        3
    } else {
        0
    }
}

pub(crate) fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::io(path, e))
}

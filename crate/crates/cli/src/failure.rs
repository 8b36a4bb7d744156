use std::fmt;
use std::path::Path;

use balson_core::BalsonError;

/// Process exit status for each failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Numerical = 2,
    Io = 3,
}

/// A command failure tagged with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub kind: ExitKind,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn usage(error: impl Into<anyhow::Error>) -> Self {
        Failure { kind: ExitKind::Usage, error: error.into() }
    }

    pub fn numerical(error: impl Into<anyhow::Error>) -> Self {
        Failure { kind: ExitKind::Numerical, error: error.into() }
    }

    pub fn io(path: &Path, error: impl Into<anyhow::Error>) -> Self {
        Failure {
            kind: ExitKind::Io,
            error: error.into().context(format!("{}", path.display())),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.kind as i32
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl std::error::Error for Failure {}

/// Bad parameters are the caller's fault; everything else is numerical.
impl From<BalsonError> for Failure {
    fn from(e: BalsonError) -> Self {
        match e.root() {
            BalsonError::InvalidParameter { .. } | BalsonError::DimensionMismatch { .. } => Failure::usage(e),
            _ => Failure::numerical(e),
        }
    }
}

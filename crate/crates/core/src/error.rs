use thiserror::Error;

/// Errors produced by the solver stack.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum BalsonError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// Density is +inf because some alpha_i < 1 sits on a face with omega_i = 0.
    #[error("unbounded density at component {index} (alpha = {alpha}, omega = 0)")]
    UnboundedDensity { index: usize, alpha: f64 },

    #[error("moment matching degenerate: no dimension yields a finite positive concentration")]
    MomentMatchingDegenerate,

    #[error("mode undefined: no concentration exceeds 1")]
    ModeUndefined,

    #[error("rejection budget exceeded: {accepted} of {requested} accepted after {proposals} proposals")]
    RejectionBudgetExceeded {
        accepted: usize,
        requested: usize,
        proposals: u64,
    },

    #[error("degenerate weights: effective sample size {ess}")]
    DegenerateWeights { ess: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("round {round}: {source}")]
    Round {
        round: usize,
        #[source]
        source: Box<BalsonError>,
    },

    #[error("coordinate descent did not converge after {sweeps} sweeps (residual norm {residual_norm})")]
    NoConvergence { sweeps: usize, residual_norm: f64 },

    #[error("Newton step failed at barrier level mu = {mu}")]
    NewtonFailure { mu: f64 },

    #[error("conditional covariance is numerically singular")]
    SingularCovariance,

    #[error("sparsity undefined for the all-zero vector")]
    SparsityUndefined,

    #[error("degenerate t-test: differences have zero variance")]
    DegenerateTTest,
}

impl BalsonError {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        BalsonError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn in_round(self, round: usize) -> Self {
        BalsonError::Round {
            round,
            source: Box::new(self),
        }
    }

    /// Strips any round annotations.
    pub fn root(&self) -> &BalsonError {
        match self {
            BalsonError::Round { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, BalsonError>;

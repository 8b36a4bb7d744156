//! End-to-end solver: sample the posterior, match a Dirichlet, take its
//! sparse mode and scale it back to the parameter budget.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dirichlet::{mode, DirichletParams, SimplexVector};
use crate::error::{BalsonError, Result};
use crate::model::{merge_signed, rescale, Dataset, LeastSquares, ModelSpec, ParameterVector};
use crate::samplers::{estimate_posterior, RoundReport, SamplerConfig, SamplerKind};

/// Posterior estimation scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BalsonMethod {
    #[serde(rename = "rs")]
    Rs,
    #[serde(rename = "is")]
    Is,
    #[serde(rename = "rsirs")]
    Rsirs,
    #[serde(rename = "isirs")]
    Isirs,
}

impl BalsonMethod {
    pub const ALL: [BalsonMethod; 4] = [
        BalsonMethod::Rs,
        BalsonMethod::Is,
        BalsonMethod::Rsirs,
        BalsonMethod::Isirs,
    ];

    fn first_pass(self) -> SamplerKind {
        match self {
            BalsonMethod::Rs | BalsonMethod::Rsirs => SamplerKind::Rejection,
            BalsonMethod::Is | BalsonMethod::Isirs => SamplerKind::Importance,
        }
    }

    fn rounds(self, cfg: &SamplerConfig) -> usize {
        match self {
            BalsonMethod::Rs | BalsonMethod::Is => 0,
            BalsonMethod::Rsirs | BalsonMethod::Isirs => cfg.resample_rounds,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BalsonMethod::Rs => "rs",
            BalsonMethod::Is => "is",
            BalsonMethod::Rsirs => "rsirs",
            BalsonMethod::Isirs => "isirs",
        }
    }
}

impl fmt::Display for BalsonMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BalsonMethod {
    type Err = BalsonError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(BalsonMethod::Rs),
            "is" => Ok(BalsonMethod::Is),
            "rsirs" => Ok(BalsonMethod::Rsirs),
            "isirs" => Ok(BalsonMethod::Isirs),
            other => Err(BalsonError::invalid("method", format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalsonConfig {
    pub method: BalsonMethod,
    pub prior: DirichletParams,
    pub spec: ModelSpec,
    pub sampler: SamplerConfig,
}

impl BalsonConfig {
    /// Flat prior over `spec.order` coefficients.
    pub fn new(method: BalsonMethod, spec: ModelSpec, sampler: SamplerConfig) -> Result<Self> {
        Ok(BalsonConfig {
            method,
            prior: DirichletParams::uniform(spec.order)?,
            spec,
            sampler,
        })
    }

    pub fn with_prior(mut self, prior: DirichletParams) -> Self {
        self.prior = prior;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub method: BalsonMethod,
    pub prior: DirichletParams,
    pub prior_is_uniform: bool,
    pub rounds: Vec<RoundReport>,
    /// `alpha_0` after each round.
    pub concentration_trajectory: Vec<f64>,
    /// Set when no posterior concentration exceeded 1 and the posterior
    /// mean was returned in place of the mode.
    pub mode_fallback: bool,
    pub seed: u64,
    pub wall_clock_secs: f64,
}

impl FitDiagnostics {
    /// Acceptance rate of the rejection pass, if one ran.
    pub fn acceptance_rate(&self) -> Option<f64> {
        self.rounds
            .iter()
            .find(|r| r.kind == SamplerKind::Rejection)
            .map(|r| r.acceptance_rate)
    }

    pub fn ess_per_round(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.ess).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub theta_star: ParameterVector,
    pub alpha_star: DirichletParams,
    pub omega_star: SimplexVector,
    pub diagnostics: FitDiagnostics,
}

impl FitReport {
    /// Equality ignoring wall-clock time.
    pub fn same_result(&self, other: &FitReport) -> bool {
        let mut a = self.clone();
        a.diagnostics.wall_clock_secs = other.diagnostics.wall_clock_secs;
        &a == other
    }
}

/// Solves the budgeted polynomial fit for `data`.
pub fn solve(data: &Dataset, cfg: &BalsonConfig) -> Result<FitReport> {
    cfg.spec.validate()?;
    let problem = LeastSquares::polynomial(data, &cfg.spec)?;
    solve_problem(&problem, cfg)
}

/// Solves an arbitrary [`LeastSquares`] problem over the scaled simplex.
pub fn solve_problem(problem: &LeastSquares, cfg: &BalsonConfig) -> Result<FitReport> {
    let start = Instant::now();
    if cfg.prior.len() != problem.dim() {
        return Err(BalsonError::DimensionMismatch {
            expected: problem.dim(),
            actual: cfg.prior.len(),
        });
    }
    let estimate = estimate_posterior(
        cfg.method.first_pass(),
        cfg.method.rounds(&cfg.sampler),
        problem,
        &cfg.prior,
        &cfg.sampler,
    )?;
    let alpha_star = estimate.alpha;
    let (omega_star, mode_fallback) = match mode(&alpha_star) {
        Ok(w) => (w, false),
        Err(BalsonError::ModeUndefined) => {
            log::warn!("no posterior concentration exceeds 1; using the posterior mean");
            (alpha_star.mean(), true)
        }
        Err(e) => return Err(e),
    };
    let theta_star = rescale(&omega_star, problem.budget());
    let diagnostics = FitDiagnostics {
        method: cfg.method,
        prior: cfg.prior.clone(),
        prior_is_uniform: cfg.prior.as_slice().iter().all(|a| *a == 1.0),
        concentration_trajectory: estimate.rounds.iter().map(|r| r.concentration).collect(),
        rounds: estimate.rounds,
        mode_fallback,
        seed: cfg.sampler.seed,
        wall_clock_secs: start.elapsed().as_secs_f64(),
    };
    Ok(FitReport {
        theta_star,
        alpha_star,
        omega_star,
        diagnostics,
    })
}

/// Result of the signed (ordinary L1) reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedFit {
    pub theta: Vec<f64>,
    pub split: FitReport,
}

/// Solves `min ||y - f(x; theta)||^2` subject to `sum |theta_i| <= C` by
/// splitting `theta` into positive and negative parts. `cfg.spec.order` is
/// the signed order; the prior must have twice that many components.
pub fn solve_signed(data: &Dataset, cfg: &BalsonConfig) -> Result<SignedFit> {
    let problem = LeastSquares::signed_polynomial(data, &cfg.spec)?;
    let split = solve_problem(&problem, cfg)?;
    let theta = merge_signed(&split.theta_star)?;
    Ok(SignedFit { theta, split })
}

/// Flat prior for the signed reduction of order `signed_order`.
pub fn signed_config(
    method: BalsonMethod,
    signed_order: usize,
    budget: f64,
    sampler: SamplerConfig,
) -> Result<BalsonConfig> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(BalsonError::invalid("budget", "must be positive and finite"));
    }
    Ok(BalsonConfig {
        method,
        prior: DirichletParams::uniform(2 * signed_order)?,
        spec: ModelSpec {
            order: signed_order,
            budget,
        },
        sampler,
    })
}

//! Monte-Carlo estimation of the posterior moments: rejection sampling,
//! importance sampling, and the iterated importance-resampling schemes
//! seeded by either one.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dirichlet::{self, match_moments, DirichletParams, SimplexVector};
use crate::error::{BalsonError, Result};
use crate::model::LeastSquares;
use crate::rng::substream;

/// Sample-count, round-count and seed settings shared by all samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    /// `L`, samples per round.
    pub sample_count: usize,
    /// `R`, importance-resampling rounds after the first pass.
    pub resample_rounds: usize,
    /// Proposal cap for rejection sampling.
    pub max_proposals: u64,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            sample_count: 10_000,
            resample_rounds: 5,
            max_proposals: 10_000_000,
            seed: 0,
        }
    }
}

impl SamplerConfig {
    /// Default settings with `L` samples and a `1000 * L` proposal cap.
    pub fn with_samples(sample_count: usize) -> Self {
        SamplerConfig {
            sample_count,
            max_proposals: 1000 * sample_count as u64,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_count < 100 {
            return Err(BalsonError::invalid("sample_count", "need at least 100 samples"));
        }
        if self.resample_rounds < 1 {
            return Err(BalsonError::invalid("resample_rounds", "need at least 1 round"));
        }
        if self.max_proposals < self.sample_count as u64 {
            return Err(BalsonError::invalid(
                "max_proposals",
                "must be at least sample_count",
            ));
        }
        Ok(())
    }
}

/// Simplex samples with normalized weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSampleSet {
    pub samples: Vec<SimplexVector>,
    pub weights: Vec<f64>,
    pub ess: f64,
    /// Accepted fraction of proposals; `1.0` for importance sampling.
    pub acceptance_rate: f64,
}

impl WeightedSampleSet {
    /// Builds a set from explicit weights, which must already sum to 1.
    pub fn new(samples: Vec<SimplexVector>, weights: Vec<f64>) -> Result<Self> {
        if samples.len() != weights.len() {
            return Err(BalsonError::DimensionMismatch {
                expected: samples.len(),
                actual: weights.len(),
            });
        }
        if samples.is_empty() {
            return Err(BalsonError::invalid("samples", "empty sample set"));
        }
        let k = samples[0].len();
        if let Some(bad) = samples.iter().find(|s| s.len() != k) {
            return Err(BalsonError::DimensionMismatch {
                expected: k,
                actual: bad.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(BalsonError::invalid("weights", "must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(BalsonError::invalid("weights", format!("sum to {total}, not 1")));
        }
        let ess = effective_sample_size(&weights);
        Ok(WeightedSampleSet {
            samples,
            weights,
            ess,
            acceptance_rate: 1.0,
        })
    }

    fn uniform(samples: Vec<SimplexVector>, acceptance_rate: f64) -> Self {
        let l = samples.len();
        WeightedSampleSet {
            samples,
            weights: vec![1.0 / l as f64; l],
            ess: l as f64,
            acceptance_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// `1 / sum(w^2)` for normalized weights.
pub fn effective_sample_size(weights: &[f64]) -> f64 {
    1.0 / weights.iter().map(|w| w * w).sum::<f64>()
}

/// Turns log-weights into normalized weights, subtracting the maximum
/// before exponentiation. Returns the weights and their ESS.
pub fn normalize_log_weights(log_weights: &[f64]) -> Result<(Vec<f64>, f64)> {
    if log_weights.iter().any(|w| w.is_nan()) {
        return Err(BalsonError::NonFinite("log-weight is NaN".into()));
    }
    let max = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(BalsonError::NonFinite("no finite log-weight".into()));
    }
    let mut weights: Vec<f64> = log_weights.iter().map(|w| (w - max).exp()).collect();
    // the maximal entry contributes exp(0) = 1, so the sum is never zero
    let total: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= total;
    }
    let ess = effective_sample_size(&weights);
    Ok((weights, ess))
}

/// Unconstrained minimum of `||y - A theta||^2`, via a minimum-norm SVD
/// solve. No point of the scaled simplex can do better, so
/// `exp(-bound / 2)` caps the likelihood.
pub fn rss_lower_bound(problem: &LeastSquares) -> f64 {
    if problem.observations() == 0 {
        return 0.0;
    }
    let design = problem.design();
    let svd = design.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * f64::EPSILON * design.nrows().max(design.ncols()) as f64;
    let theta: DVector<f64> = svd
        .solve(problem.targets(), eps)
        .expect("both singular vector sets were computed");
    (problem.targets() - design * theta).norm_squared()
}

fn check_prior(problem: &LeastSquares, prior: &DirichletParams) -> Result<()> {
    if prior.len() != problem.dim() {
        return Err(BalsonError::DimensionMismatch {
            expected: problem.dim(),
            actual: prior.len(),
        });
    }
    Ok(())
}

/// Draws `L` accepted samples of the posterior by proposing from the prior
/// and accepting with probability `exp(-(RSS - RSS_min) / 2)`.
pub fn rejection_sample<R: Rng + ?Sized>(
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<WeightedSampleSet> {
    cfg.validate()?;
    check_prior(problem, prior)?;
    let bound = rss_lower_bound(problem);
    let target = cfg.sample_count;
    let mut accepted = Vec::with_capacity(target);
    let mut proposals: u64 = 0;
    while accepted.len() < target {
        if proposals >= cfg.max_proposals {
            return Err(BalsonError::RejectionBudgetExceeded {
                accepted: accepted.len(),
                requested: target,
                proposals,
            });
        }
        proposals += 1;
        let omega = dirichlet::sample(prior, rng);
        let rss = problem.rss_simplex(omega.as_slice());
        if rss.is_nan() {
            return Err(BalsonError::NonFinite("residual sum of squares".into()));
        }
        let accept_prob = (-0.5 * (rss - bound).max(0.0)).exp();
        if rng.random::<f64>() < accept_prob {
            accepted.push(omega);
        }
    }
    Ok(WeightedSampleSet::uniform(
        accepted,
        target as f64 / proposals as f64,
    ))
}

/// Draws `L` samples from the prior and weights each by its likelihood.
pub fn importance_sample<R: Rng + ?Sized>(
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<WeightedSampleSet> {
    cfg.validate()?;
    check_prior(problem, prior)?;
    let mut samples = Vec::with_capacity(cfg.sample_count);
    let mut log_weights = Vec::with_capacity(cfg.sample_count);
    for _ in 0..cfg.sample_count {
        let omega = dirichlet::sample(prior, rng);
        log_weights.push(-0.5 * problem.rss_simplex(omega.as_slice()));
        samples.push(omega);
    }
    let (weights, ess) = normalize_log_weights(&log_weights)?;
    Ok(WeightedSampleSet {
        samples,
        weights,
        ess,
        acceptance_rate: 1.0,
    })
}

/// Weighted per-component mean and (biased) variance.
pub fn weighted_moments(set: &WeightedSampleSet) -> Result<(Vec<f64>, Vec<f64>)> {
    if set.ess.is_nan() || set.ess <= 1.0 + 1e-9 {
        return Err(BalsonError::DegenerateWeights { ess: set.ess });
    }
    let k = set.samples[0].len();
    let mut mean = vec![0.0; k];
    for (s, &w) in set.samples.iter().zip(&set.weights) {
        for (m, &v) in mean.iter_mut().zip(s.as_slice()) {
            *m += w * v;
        }
    }
    let mut var = vec![0.0; k];
    for (s, &w) in set.samples.iter().zip(&set.weights) {
        for ((acc, &v), &m) in var.iter_mut().zip(s.as_slice()).zip(&mean) {
            let d = v - m;
            *acc += w * d * d;
        }
    }
    Ok((mean, var))
}

/// Which scheme produced a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Rejection,
    Importance,
}

/// Per-round record of an estimation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub kind: SamplerKind,
    pub ess: f64,
    pub acceptance_rate: f64,
    pub alpha: DirichletParams,
    pub concentration: f64,
}

/// Matched posterior parameters and how they were reached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorEstimate {
    pub alpha: DirichletParams,
    pub rounds: Vec<RoundReport>,
}

/// One sampling pass followed by moment matching.
pub fn sample_and_match<R: Rng + ?Sized>(
    kind: SamplerKind,
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<(DirichletParams, WeightedSampleSet)> {
    let set = match kind {
        SamplerKind::Rejection => rejection_sample(problem, prior, cfg, rng)?,
        SamplerKind::Importance => importance_sample(problem, prior, cfg, rng)?,
    };
    let (mean, var) = weighted_moments(&set)?;
    Ok((match_moments(&mean, &var)?, set))
}

/// Round 0 runs `first` against `prior`; each of the following `rounds`
/// runs importance sampling with proposal and prior both set to the
/// previous round's matched Dirichlet, so the weights are the likelihood
/// alone. Round `i` draws from substream `(cfg.seed, i)`.
pub fn estimate_posterior(
    first: SamplerKind,
    rounds: usize,
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    cfg.validate()?;
    check_prior(problem, prior)?;
    let mut reports = Vec::with_capacity(rounds + 1);
    let mut current = prior.clone();
    for round in 0..=rounds {
        let kind = if round == 0 { first } else { SamplerKind::Importance };
        let mut rng = substream(cfg.seed, round as u64);
        let (alpha, set) = sample_and_match(kind, problem, &current, cfg, &mut rng)
            .map_err(|e| e.in_round(round))?;
        let concentration = alpha.concentration();
        log::debug!(
            "round {round} ({kind:?}): alpha_0 = {concentration:.4}, ess = {:.1}, acceptance = {:.4}",
            set.ess,
            set.acceptance_rate
        );
        reports.push(RoundReport {
            round,
            kind,
            ess: set.ess,
            acceptance_rate: set.acceptance_rate,
            alpha: alpha.clone(),
            concentration,
        });
        current = alpha;
    }
    Ok(PosteriorEstimate {
        alpha: current,
        rounds: reports,
    })
}

/// Rejection sampling once, then `R` importance-resampling rounds.
pub fn rsirs(
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    estimate_posterior(SamplerKind::Rejection, cfg.resample_rounds, problem, prior, cfg)
}

/// Importance sampling once, then `R` importance-resampling rounds.
pub fn isirs(
    problem: &LeastSquares,
    prior: &DirichletParams,
    cfg: &SamplerConfig,
) -> Result<PosteriorEstimate> {
    estimate_posterior(SamplerKind::Importance, cfg.resample_rounds, problem, prior, cfg)
}

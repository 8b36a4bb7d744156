use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Gamma, InverseGaussian, StandardNormal};
use serde::{Deserialize, Serialize};

use super::problem;
use crate::error::{BalsonError, Result};
use crate::model::{Dataset, ModelSpec};

/// Gibbs settings. `shape` and `rate` parameterize the gamma hyperprior on
/// the squared shrinkage parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub shape: f64,
    pub rate: f64,
}

impl Default for GibbsSettings {
    fn default() -> Self {
        GibbsSettings {
            iterations: 6000,
            burn_in: 1000,
            shape: 1.0,
            rate: 1.78,
        }
    }
}

impl GibbsSettings {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(BalsonError::invalid("gibbs", "iterations must exceed burn-in"));
        }
        if !(self.shape > 0.0 && self.rate > 0.0) {
            return Err(BalsonError::invalid("gibbs", "hyperprior parameters must be positive"));
        }
        Ok(())
    }
}

/// Gibbs sampler for the Laplace-prior linear model with unit noise
/// variance, using the normal scale-mixture representation:
///
/// - `theta | tau` ~ N(A^-1 X^T y, A^-1) with `A = X^T X + diag(1/tau^2)`
/// - `1/tau_j^2 | theta, lambda` ~ InverseGaussian(lambda/|theta_j|, lambda^2)
/// - `lambda^2 | tau` ~ Gamma(K + shape, rate + sum(tau^2)/2)
///
/// Returns the post-burn-in mean of `theta`.
pub fn gibbs_posterior_mean<R: Rng + ?Sized>(
    gram: &DMatrix<f64>,
    cross: &DVector<f64>,
    settings: &GibbsSettings,
    rng: &mut R,
) -> Result<Vec<f64>> {
    settings.validate()?;
    let k = cross.len();
    let mut tau2 = vec![1.0; k];
    let mut lambda2 = settings.shape / settings.rate;
    let mut sum = DVector::zeros(k);

    for iter in 0..settings.iterations {
        let mut a = gram.clone();
        for j in 0..k {
            a[(j, j)] += 1.0 / tau2[j];
        }
        let chol = a.cholesky().ok_or(BalsonError::SingularCovariance)?;
        let mean = chol.solve(cross);
        let z = DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        // A = L L^T, so L^-T z has covariance A^-1
        let noise = chol
            .l()
            .transpose()
            .solve_upper_triangular(&z)
            .ok_or(BalsonError::SingularCovariance)?;
        let theta = mean + noise;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(BalsonError::SingularCovariance);
        }

        let lambda = lambda2.sqrt();
        for j in 0..k {
            let magnitude = theta[j].abs().max(1e-300);
            let ig = InverseGaussian::new((lambda / magnitude).min(1e300), lambda2)
                .map_err(|e| BalsonError::NonFinite(format!("inverse-Gaussian draw: {e}")))?;
            let inv = ig.sample(rng).max(1e-300);
            tau2[j] = 1.0 / inv;
        }

        let shape = k as f64 + settings.shape;
        let rate = settings.rate + 0.5 * tau2.iter().sum::<f64>();
        lambda2 = Gamma::new(shape, 1.0 / rate)
            .map_err(|e| BalsonError::NonFinite(format!("gamma draw: {e}")))?
            .sample(rng);

        if iter >= settings.burn_in {
            sum += &theta;
        }
    }
    let kept = (settings.iterations - settings.burn_in) as f64;
    Ok(sum.iter().map(|s| s / kept).collect())
}

/// Bayesian LASSO fit of the polynomial model (signed coefficients).
pub fn bayesian_lasso_fit<R: Rng + ?Sized>(
    data: &Dataset,
    spec: &ModelSpec,
    settings: &GibbsSettings,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let ls = problem(data, spec)?;
    gibbs_posterior_mean(ls.gram(), ls.cross(), settings, rng)
}

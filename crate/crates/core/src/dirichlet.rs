//! Dirichlet distribution primitives: density, sampling, moments, moment
//! matching and the sparse mode rule.

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{BalsonError, Result};

/// Absolute tolerance on the component sum of a [`SimplexVector`].
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Lower clamp applied to recovered concentrations.
pub const MIN_CONCENTRATION: f64 = 1e-6;

const MIN_MATCH_VARIANCE: f64 = 1e-12;
const MATCH_MEAN_MARGIN: f64 = 1e-9;

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexVector(Vec<f64>);

impl SimplexVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(BalsonError::invalid("omega", "need at least 2 components"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(BalsonError::invalid(
                "omega",
                format!("component {v} is negative or non-finite"),
            ));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(BalsonError::invalid(
                "omega",
                format!("components sum to {sum}, not 1"),
            ));
        }
        Ok(SimplexVector(values))
    }

    /// Scales a nonnegative vector with positive sum onto the simplex.
    pub fn normalized(values: Vec<f64>) -> Result<Self> {
        let sum: f64 = values.iter().sum();
        if !(sum.is_finite() && sum > 0.0) || values.iter().any(|v| *v < 0.0) {
            return Err(BalsonError::invalid(
                "omega",
                "cannot normalize a vector without positive finite mass",
            ));
        }
        Self::new(values.into_iter().map(|v| v / sum).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for SimplexVector {
    type Error = BalsonError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SimplexVector> for Vec<f64> {
    fn from(v: SimplexVector) -> Self {
        v.0
    }
}

/// Concentration vector of a Dirichlet distribution.
///
/// Under the log-barrier reading of the constrained problem, a barrier
/// multiplier `mu_i` on `ln theta_i` corresponds to `alpha_i = mu_i + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DirichletParams(Vec<f64>);

impl DirichletParams {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() < 2 {
            return Err(BalsonError::invalid("alpha", "need at least 2 components"));
        }
        if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(BalsonError::invalid(
                "alpha",
                format!("concentration {a} is not positive and finite"),
            ));
        }
        Ok(DirichletParams(alpha))
    }

    /// The flat prior `[1, ..., 1]`.
    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(vec![1.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `alpha_0 = sum(alpha_i)`.
    pub fn concentration(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Posterior mean `alpha / alpha_0`, always a valid simplex point.
    pub fn mean(&self) -> SimplexVector {
        let a0 = self.concentration();
        let mut m: Vec<f64> = self.0.iter().map(|a| a / a0).collect();
        fix_sum(&mut m);
        SimplexVector(m)
    }

    /// `ln B(alpha)` via log-gamma.
    pub fn ln_beta(&self) -> f64 {
        self.0.iter().map(|&a| ln_gamma(a)).sum::<f64>() - ln_gamma(self.concentration())
    }
}

impl TryFrom<Vec<f64>> for DirichletParams {
    type Error = BalsonError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DirichletParams> for Vec<f64> {
    fn from(v: DirichletParams) -> Self {
        v.0
    }
}

/// Moves the rounding residue of a normalized vector onto its largest entry.
fn fix_sum(values: &mut [f64]) {
    let sum: f64 = values.iter().sum();
    if let Some(imax) = argmax(values) {
        values[imax] = (values[imax] + (1.0 - sum)).max(0.0);
    }
}

fn argmax(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

/// `ln Dir(omega; alpha)`.
///
/// A zero component contributes `0` when `alpha_i == 1` and `-inf` when
/// `alpha_i > 1`; with `alpha_i < 1` the density is unbounded and an error
/// is returned instead.
pub fn log_density(params: &DirichletParams, point: &SimplexVector) -> Result<f64> {
    if params.len() != point.len() {
        return Err(BalsonError::DimensionMismatch {
            expected: params.len(),
            actual: point.len(),
        });
    }
    let mut acc = -params.ln_beta();
    for (i, (&a, &w)) in params.0.iter().zip(&point.0).enumerate() {
        if w > 0.0 {
            acc += (a - 1.0) * w.ln();
        } else if a < 1.0 {
            return Err(BalsonError::UnboundedDensity { index: i, alpha: a });
        } else if a > 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
    }
    Ok(acc)
}

/// Log of a unit-scale gamma variate.
///
/// Shapes below one use `G(a) = G(a + 1) * U^(1/a)`, evaluated in log space
/// so that tiny shapes do not underflow to an all-zero draw.
fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).expect("shape is positive and finite");
        g.sample(rng).ln()
    } else {
        let boosted = ln_gamma_variate(shape + 1.0, rng);
        // 1 - [0, 1) keeps the uniform in (0, 1]
        let u: f64 = 1.0 - rng.random::<f64>();
        boosted + u.ln() / shape
    }
}

/// Draws one point from `Dir(alpha)`.
pub fn sample<R: Rng + ?Sized>(params: &DirichletParams, rng: &mut R) -> SimplexVector {
    let mut logs: Vec<f64> = params.0.iter().map(|&a| ln_gamma_variate(a, rng)).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for l in logs.iter_mut() {
        *l = (*l - max).exp();
        total += *l;
    }
    for l in logs.iter_mut() {
        *l /= total;
    }
    fix_sum(&mut logs);
    SimplexVector(logs)
}

/// Analytic per-component mean and variance.
pub fn moments(params: &DirichletParams) -> (Vec<f64>, Vec<f64>) {
    let a0 = params.concentration();
    let denom = a0 * a0 * (a0 + 1.0);
    params
        .0
        .iter()
        .map(|&a| (a / a0, a * (a0 - a) / denom))
        .unzip()
}

/// Recovers Dirichlet parameters from per-component means and variances.
///
/// Each component yields an estimate `alpha_0 = m(1 - m)/v - 1`; the
/// estimates from usable components are averaged. Components with a
/// near-zero variance or a mean too close to 0 or 1 are skipped.
pub fn match_moments(mean: &[f64], variance: &[f64]) -> Result<DirichletParams> {
    if mean.len() != variance.len() {
        return Err(BalsonError::DimensionMismatch {
            expected: mean.len(),
            actual: variance.len(),
        });
    }
    if mean.len() < 2 {
        return Err(BalsonError::invalid("mean", "need at least 2 components"));
    }
    if mean.iter().chain(variance).any(|v| !v.is_finite() || *v < 0.0) {
        return Err(BalsonError::NonFinite(
            "moment estimates must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = mean.iter().sum();
    if total <= 0.0 {
        return Err(BalsonError::MomentMatchingDegenerate);
    }
    let mean: Vec<f64> = mean.iter().map(|m| m / total).collect();

    let (sum, count) = mean
        .iter()
        .zip(variance)
        .filter(|(&m, &v)| {
            v >= MIN_MATCH_VARIANCE && m > MATCH_MEAN_MARGIN && m < 1.0 - MATCH_MEAN_MARGIN
        })
        .map(|(&m, &v)| m * (1.0 - m) / v - 1.0)
        .filter(|a0| a0.is_finite() && *a0 > 0.0)
        .fold((0.0, 0usize), |(s, c), a0| (s + a0, c + 1));
    if count == 0 {
        return Err(BalsonError::MomentMatchingDegenerate);
    }
    let a0 = sum / count as f64;
    Ok(DirichletParams(
        mean.iter().map(|m| (a0 * m).max(MIN_CONCENTRATION)).collect(),
    ))
}

/// The sparse mode: components with `alpha_i <= 1` are exactly zero, the
/// rest are `(alpha_i - 1) / (sum_{alpha_j > 1} alpha_j - K*)`.
pub fn mode(params: &DirichletParams) -> Result<SimplexVector> {
    let (active_sum, active) = params
        .0
        .iter()
        .filter(|&&a| a > 1.0)
        .fold((0.0, 0usize), |(s, c), &a| (s + a, c + 1));
    if active == 0 {
        return Err(BalsonError::ModeUndefined);
    }
    let denom = active_sum - active as f64;
    let mut omega: Vec<f64> = params
        .0
        .iter()
        .map(|&a| if a > 1.0 { (a - 1.0) / denom } else { 0.0 })
        .collect();
    fix_sum(&mut omega);
    Ok(SimplexVector(omega))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use approx::assert_relative_eq;

    fn dir(a: &[f64]) -> DirichletParams {
        DirichletParams::new(a.to_vec()).unwrap()
    }

    fn simplex(w: &[f64]) -> SimplexVector {
        SimplexVector::new(w.to_vec()).unwrap()
    }

    #[test]
    fn simplex_rejects_bad_input() {
        assert!(SimplexVector::new(vec![1.0]).is_err());
        assert!(SimplexVector::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexVector::new(vec![-0.1, 1.1]).is_err());
        assert!(SimplexVector::new(vec![f64::NAN, 1.0]).is_err());
        assert!(SimplexVector::new(vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn params_reject_bad_input() {
        assert!(DirichletParams::new(vec![1.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, 0.0]).is_err());
        assert!(DirichletParams::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn uniform_density_is_one() {
        let v = log_density(&dir(&[1.0, 1.0]), &simplex(&[0.3, 0.7])).unwrap();
        assert_relative_eq!(v, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn beta22_density_at_center() {
        let v = log_density(&dir(&[2.0, 2.0]), &simplex(&[0.5, 0.5])).unwrap();
        assert_relative_eq!(v, 1.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn density_on_boundary() {
        let p = simplex(&[0.0, 1.0]);
        assert_eq!(
            log_density(&dir(&[0.5, 2.0]), &p),
            Err(BalsonError::UnboundedDensity { index: 0, alpha: 0.5 })
        );
        assert_eq!(log_density(&dir(&[2.0, 2.0]), &p).unwrap(), f64::NEG_INFINITY);
        assert_relative_eq!(log_density(&dir(&[1.0, 2.0]), &p).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn density_dimension_mismatch() {
        assert!(matches!(
            log_density(&dir(&[1.0, 1.0, 1.0]), &simplex(&[0.5, 0.5])),
            Err(BalsonError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn moments_closed_form() {
        let (m, v) = moments(&dir(&[2.0, 2.0]));
        assert_relative_eq!(m.as_slice(), [0.5, 0.5].as_slice(), epsilon = 1e-15);
        assert_relative_eq!(v.as_slice(), [0.05, 0.05].as_slice(), epsilon = 1e-15);

        let (m, v) = moments(&dir(&[1.0, 1.0, 1.0]));
        for i in 0..3 {
            assert_relative_eq!(m[i], 1.0 / 3.0, epsilon = 1e-15);
            assert_relative_eq!(v[i], 1.0 / 18.0, epsilon = 1e-15);
        }

        let (m, v) = moments(&dir(&[2.0, 3.0, 4.0]));
        assert_relative_eq!(m[0], 2.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(m[1], 3.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(m[2], 4.0 / 9.0, epsilon = 1e-15);
        assert_relative_eq!(v[0], 14.0 / 810.0, epsilon = 1e-15);
    }

    #[test]
    fn match_moments_round_trips() {
        let a = match_moments(&[0.5, 0.5], &[0.05, 0.05]).unwrap();
        assert_relative_eq!(a.as_slice(), [2.0, 2.0].as_slice(), max_relative = 1e-12);

        let (m, v) = moments(&dir(&[2.0, 3.0, 4.0]));
        let a = match_moments(&m, &v).unwrap();
        assert_relative_eq!(a.as_slice(), [2.0, 3.0, 4.0].as_slice(), epsilon = 1e-9);
    }

    #[test]
    fn match_moments_skips_degenerate_dimensions() {
        // third component carries no usable variance; estimate comes from the first two
        let a = match_moments(&[0.5, 0.5, 0.0], &[0.05, 0.05, 0.0]).unwrap();
        assert_relative_eq!(a.as_slice()[..2], [2.0, 2.0][..], max_relative = 1e-12);
        assert_eq!(a.as_slice()[2], MIN_CONCENTRATION);
    }

    #[test]
    fn match_moments_degenerate() {
        assert_eq!(
            match_moments(&[0.5, 0.5], &[0.0, 0.0]),
            Err(BalsonError::MomentMatchingDegenerate)
        );
        // variance larger than m(1-m) gives a negative alpha_0 everywhere
        assert_eq!(
            match_moments(&[0.5, 0.5], &[0.3, 0.3]),
            Err(BalsonError::MomentMatchingDegenerate)
        );
        assert!(match_moments(&[0.5, 0.5], &[0.05]).is_err());
    }

    #[test]
    fn match_moments_renormalizes_means() {
        let a = match_moments(&[1.0, 1.0], &[0.05, 0.05]).unwrap();
        assert_relative_eq!(a.as_slice(), [2.0, 2.0].as_slice(), max_relative = 1e-12);
    }

    #[test]
    fn mode_examples() {
        let m = mode(&dir(&[2.0, 2.0])).unwrap();
        assert_relative_eq!(m.as_slice(), [0.5, 0.5].as_slice(), epsilon = 1e-15);

        let m = mode(&dir(&[3.0, 1.5, 1.0])).unwrap();
        assert_relative_eq!(m.as_slice(), [0.8, 0.2, 0.0].as_slice(), epsilon = 1e-15);
        assert_eq!(m.as_slice()[2], 0.0);

        let m = mode(&dir(&[0.5, 2.0, 3.0])).unwrap();
        assert_eq!(m.as_slice()[0], 0.0);
        assert_relative_eq!(m.as_slice()[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(m.as_slice()[2], 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn mode_undefined_without_large_alpha() {
        assert_eq!(mode(&dir(&[1.0, 0.5])), Err(BalsonError::ModeUndefined));
    }

    #[test]
    fn tiny_shapes_still_land_on_simplex() {
        let p = dir(&[1e-6, 1e-6, 1e-6]);
        let mut rng = substream(3, 0);
        for _ in 0..1000 {
            let s = sample(&p, &mut rng);
            let sum: f64 = s.as_slice().iter().sum();
            assert!((sum - 1.0).abs() <= SIMPLEX_TOLERANCE);
            assert!(s.as_slice().iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let p = dir(&[0.3, 2.0, 5.0]);
        let a: Vec<_> = (0..10).map({
            let mut rng = substream(11, 2);
            move |_| sample(&p, &mut rng)
        }).collect();
        let p = dir(&[0.3, 2.0, 5.0]);
        let mut rng = substream(11, 2);
        let b: Vec<_> = (0..10).map(|_| sample(&p, &mut rng)).collect();
        assert_eq!(a, b);
    }
}

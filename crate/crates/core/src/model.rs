//! Polynomial model, Gaussian likelihood, and the mapping between the
//! budgeted parameter vector and the simplex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dirichlet::{log_density, DirichletParams, SimplexVector};
use crate::error::{BalsonError, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Paired scalar observations `(x_n, y_n)`. May be empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(inputs: Vec<f64>, targets: Vec<f64>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(BalsonError::DimensionMismatch {
                expected: inputs.len(),
                actual: targets.len(),
            });
        }
        if inputs.iter().chain(&targets).any(|v| !v.is_finite()) {
            return Err(BalsonError::NonFinite("dataset values".into()));
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn inputs(&self) -> &[f64] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// FNV-1a over the bit patterns of all values; stable across platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in self.inputs.iter().chain(&self.targets) {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        h
    }
}

/// Number of coefficients `K` and L1 budget `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub order: usize,
    pub budget: f64,
}

impl ModelSpec {
    pub fn new(order: usize, budget: f64) -> Result<Self> {
        let spec = ModelSpec { order, budget };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(BalsonError::invalid("order", "need at least 2 coefficients"));
        }
        if !(self.budget.is_finite() && self.budget > 0.0) {
            return Err(BalsonError::invalid("budget", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Model coefficients `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(Vec<f64>);

impl ParameterVector {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(BalsonError::NonFinite("theta".into()));
        }
        Ok(ParameterVector(theta))
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

/// Monomial features `[1, x, x^2, ..., x^(order-1)]`.
pub fn basis(x: f64, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order);
    let mut p = 1.0;
    for _ in 0..order {
        out.push(p);
        p *= x;
    }
    out
}

/// `theta^T basis(x)`, evaluated by Horner's rule.
pub fn predict(theta: &[f64], x: f64) -> f64 {
    theta.iter().rev().fold(0.0, |acc, &t| acc * x + t)
}

fn rss_direct(data: &Dataset, theta: &[f64]) -> f64 {
    data.inputs
        .iter()
        .zip(&data.targets)
        .map(|(&x, &y)| {
            let r = y - predict(theta, x);
            r * r
        })
        .sum()
}

/// Unit-variance Gaussian log-likelihood of the residuals at `theta = C * omega`.
pub fn log_likelihood(data: &Dataset, omega: &SimplexVector, spec: &ModelSpec) -> Result<f64> {
    if omega.len() != spec.order {
        return Err(BalsonError::DimensionMismatch {
            expected: spec.order,
            actual: omega.len(),
        });
    }
    let theta = rescale(omega, spec.budget);
    let n = data.len() as f64;
    Ok(-0.5 * n * LN_2PI - 0.5 * rss_direct(data, theta.as_slice()))
}

/// Log-likelihood plus log-prior; the quantity whose maximizer is sought.
pub fn log_posterior_unnorm(
    data: &Dataset,
    omega: &SimplexVector,
    prior: &DirichletParams,
    spec: &ModelSpec,
) -> Result<f64> {
    Ok(log_likelihood(data, omega, spec)? + log_density(prior, omega)?)
}

/// `theta = C * omega`.
pub fn rescale(omega: &SimplexVector, budget: f64) -> ParameterVector {
    ParameterVector(omega.as_slice().iter().map(|w| budget * w).collect())
}

/// Splits a signed vector into `[positive parts, negative parts]`.
pub fn split_signed(theta_signed: &[f64]) -> ParameterVector {
    let pos = theta_signed.iter().map(|&t| t.max(0.0));
    let neg = theta_signed.iter().map(|&t| (-t).max(0.0));
    ParameterVector(pos.chain(neg).collect())
}

/// Inverse of [`split_signed`]: `theta_i - theta_{i+K}`.
pub fn merge_signed(theta_nonneg: &ParameterVector) -> Result<Vec<f64>> {
    let v = theta_nonneg.as_slice();
    if !v.len().is_multiple_of(2) {
        return Err(BalsonError::invalid("theta", "split vector must have even length"));
    }
    if v.iter().any(|t| *t < 0.0) {
        return Err(BalsonError::invalid("theta", "split vector must be nonnegative"));
    }
    let half = v.len() / 2;
    Ok(v[..half].iter().zip(&v[half..]).map(|(p, n)| p - n).collect())
}

/// A linear least-squares problem `min ||y - A theta||^2` over the scaled
/// simplex `theta = C * omega`, with the Gram matrix cached so that each
/// residual evaluation costs `O(K^2)` instead of `O(NK)`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    design: DMatrix<f64>,
    targets: DVector<f64>,
    budget: f64,
    gram: DMatrix<f64>,
    cross: DVector<f64>,
    target_energy: f64,
}

impl LeastSquares {
    pub fn new(design: DMatrix<f64>, targets: DVector<f64>, budget: f64) -> Result<Self> {
        if design.nrows() != targets.len() {
            return Err(BalsonError::DimensionMismatch {
                expected: design.nrows(),
                actual: targets.len(),
            });
        }
        if design.ncols() < 2 {
            return Err(BalsonError::invalid("design", "need at least 2 columns"));
        }
        if !(budget.is_finite() && budget > 0.0) {
            return Err(BalsonError::invalid("budget", "must be positive and finite"));
        }
        let gram = design.tr_mul(&design);
        let cross = design.tr_mul(&targets);
        let target_energy = targets.norm_squared();
        Ok(LeastSquares {
            design,
            targets,
            budget,
            gram,
            cross,
            target_energy,
        })
    }

    /// Rows `basis(x_n)`.
    pub fn polynomial(data: &Dataset, spec: &ModelSpec) -> Result<Self> {
        spec.validate()?;
        let design = DMatrix::from_fn(data.len(), spec.order, |r, c| {
            data.inputs[r].powi(c as i32)
        });
        Self::new(design, DVector::from_column_slice(&data.targets), spec.budget)
    }

    /// Rows `[basis(x_n), -basis(x_n)]`, so that a nonnegative split vector
    /// predicts exactly what its merged signed vector predicts.
    pub fn signed_polynomial(data: &Dataset, spec: &ModelSpec) -> Result<Self> {
        if spec.order < 1 {
            return Err(BalsonError::invalid("order", "need at least 1 signed coefficient"));
        }
        if !(spec.budget.is_finite() && spec.budget > 0.0) {
            return Err(BalsonError::invalid("budget", "must be positive and finite"));
        }
        let k = spec.order;
        let design = DMatrix::from_fn(data.len(), 2 * k, |r, c| {
            let v = data.inputs[r].powi((c % k) as i32);
            if c < k {
                v
            } else {
                -v
            }
        });
        Self::new(design, DVector::from_column_slice(&data.targets), spec.budget)
    }

    pub fn dim(&self) -> usize {
        self.design.ncols()
    }

    pub fn observations(&self) -> usize {
        self.design.nrows()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.targets
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `A^T y`.
    pub fn cross(&self) -> &DVector<f64> {
        &self.cross
    }

    /// Residual sum of squares at `theta`, via the cached Gram matrix.
    pub fn rss(&self, theta: &[f64]) -> f64 {
        let k = self.dim();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..k {
            let ti = theta[i];
            if ti == 0.0 {
                continue;
            }
            lin += self.cross[i] * ti;
            let row: f64 = (0..k).map(|j| self.gram[(i, j)] * theta[j]).sum();
            quad += ti * row;
        }
        (self.target_energy - 2.0 * lin + quad).max(0.0)
    }

    /// Residual sum of squares at `theta = C * omega`.
    pub fn rss_simplex(&self, omega: &[f64]) -> f64 {
        let c = self.budget;
        let c2 = c * c;
        let k = self.dim();
        let mut quad = 0.0;
        let mut lin = 0.0;
        for i in 0..k {
            let wi = omega[i];
            if wi == 0.0 {
                continue;
            }
            lin += self.cross[i] * wi;
            let row: f64 = (0..k).map(|j| self.gram[(i, j)] * omega[j]).sum();
            quad += wi * row;
        }
        (self.target_energy - 2.0 * c * lin + c2 * quad).max(0.0)
    }

    pub fn log_likelihood(&self, omega: &[f64]) -> f64 {
        -0.5 * self.observations() as f64 * LN_2PI - 0.5 * self.rss_simplex(omega)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const PAPER_THETA: [f64; 5] = [0.0013, 0.0380, 0.0102, 0.9082, 0.0423];

    #[test]
    fn basis_examples() {
        assert_eq!(basis(0.5, 3), vec![1.0, 0.5, 0.25]);
        assert_eq!(basis(0.0, 4), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(basis(1.0, 5), vec![1.0; 5]);
    }

    #[test]
    fn predict_examples() {
        assert_relative_eq!(predict(&[0.0, 1.0, 0.0, 0.0, 0.0], 0.3), 0.3, epsilon = 1e-15);
        assert_eq!(predict(&[1.0, 0.0, 0.0], 17.0), 1.0);
        assert_eq!(predict(&PAPER_THETA, 0.0), 0.0013);
    }

    #[test]
    fn predict_matches_basis_inner_product() {
        let theta = [0.3, -1.2, 0.7, 2.0];
        for &x in &[-1.5, 0.0, 0.25, 0.9, 3.0] {
            let direct: f64 = basis(x, 4).iter().zip(&theta).map(|(b, t)| b * t).sum();
            assert_relative_eq!(predict(&theta, x), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::new(vec![0.0], vec![]).is_err());
        assert!(Dataset::new(vec![f64::NAN], vec![0.0]).is_err());
        assert!(Dataset::new(vec![], vec![]).unwrap().is_empty());
    }

    #[test]
    fn likelihood_of_empty_dataset_is_zero() {
        let spec = ModelSpec::new(3, 1.0).unwrap();
        let w = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(log_likelihood(&Dataset::empty(), &w, &spec).unwrap(), 0.0);
    }

    #[test]
    fn likelihood_single_exact_point() {
        let spec = ModelSpec::new(2, 1.0).unwrap();
        let w = SimplexVector::new(vec![0.25, 0.75]).unwrap();
        let data = Dataset::new(vec![2.0], vec![0.25 + 0.75 * 2.0]).unwrap();
        assert_relative_eq!(
            log_likelihood(&data, &w, &spec).unwrap(),
            -0.918_938_533_204_672_7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn likelihood_matches_residual_oracle() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| (3.0 * x).sin()).collect();
        let data = Dataset::new(xs.clone(), ys.clone()).unwrap();
        let spec = ModelSpec::new(3, 2.0).unwrap();
        let w = SimplexVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        let mut rss = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            let f = 2.0 * (0.1 + 0.6 * x + 0.3 * x * x);
            rss += (y - f) * (y - f);
        }
        let expected = -5.0 * (2.0 * std::f64::consts::PI).ln() - 0.5 * rss;
        assert_relative_eq!(log_likelihood(&data, &w, &spec).unwrap(), expected, max_relative = 1e-13);

        let ls = LeastSquares::polynomial(&data, &spec).unwrap();
        assert_relative_eq!(ls.log_likelihood(w.as_slice()), expected, max_relative = 1e-12);
        assert_relative_eq!(ls.rss_simplex(w.as_slice()), rss, max_relative = 1e-10);
    }

    #[test]
    fn posterior_reduces_to_parts() {
        let spec = ModelSpec::new(3, 1.0).unwrap();
        let w = SimplexVector::new(vec![0.2, 0.3, 0.5]).unwrap();
        let prior = DirichletParams::new(vec![2.0, 3.0, 4.0]).unwrap();
        assert_eq!(
            log_posterior_unnorm(&Dataset::empty(), &w, &prior, &spec).unwrap(),
            log_density(&prior, &w).unwrap()
        );
        // the flat prior has density 1 only for K = 2; for K = 3 it is 2! = 2
        let data = Dataset::new(vec![0.1, 0.4], vec![0.3, -0.2]).unwrap();
        let spec2 = ModelSpec::new(2, 1.0).unwrap();
        let w2 = SimplexVector::new(vec![0.3, 0.7]).unwrap();
        let flat = DirichletParams::uniform(2).unwrap();
        let lp = log_posterior_unnorm(&data, &w2, &flat, &spec2).unwrap();
        assert_relative_eq!(lp, log_likelihood(&data, &w2, &spec2).unwrap(), epsilon = 1e-14);
        let flat3 = DirichletParams::uniform(3).unwrap();
        let lp3 = log_posterior_unnorm(&data, &w, &flat3, &spec).unwrap();
        assert_relative_eq!(lp3 - log_likelihood(&data, &w, &spec).unwrap(), 2f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn posterior_propagates_unbounded_density() {
        let spec = ModelSpec::new(2, 1.0).unwrap();
        let w = SimplexVector::new(vec![0.0, 1.0]).unwrap();
        let prior = DirichletParams::new(vec![0.5, 1.0]).unwrap();
        assert!(matches!(
            log_posterior_unnorm(&Dataset::empty(), &w, &prior, &spec),
            Err(BalsonError::UnboundedDensity { .. })
        ));
    }

    #[test]
    fn rescale_examples() {
        let w = SimplexVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(rescale(&w, 1.0).as_slice(), &[0.5, 0.5]);
        let w = SimplexVector::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rescale(&w, 2.0).as_slice(), &[2.0, 0.0, 0.0]);
        let w = SimplexVector::new(vec![0.125, 0.375, 0.5]).unwrap();
        assert_eq!(rescale(&w, 1.0).as_slice(), w.as_slice());
    }

    #[test]
    fn split_and_merge_examples() {
        assert_eq!(split_signed(&[1.5, -2.0]).as_slice(), &[1.5, 0.0, 0.0, 2.0]);
        assert_eq!(split_signed(&[0.0, 0.0]).as_slice(), &[0.0; 4]);
        assert_eq!(split_signed(&[-1.0]).as_slice(), &[0.0, 1.0]);

        let v = ParameterVector::new(vec![1.5, 0.0, 0.0, 2.0]).unwrap();
        assert_eq!(merge_signed(&v).unwrap(), vec![1.5, -2.0]);
        let v = ParameterVector::new(vec![0.3, 0.3]).unwrap();
        assert_eq!(merge_signed(&v).unwrap(), vec![0.0]);
    }

    #[test]
    fn merge_rejects_bad_input() {
        let odd = ParameterVector::new(vec![1.0, 0.0, 2.0]).unwrap();
        assert!(merge_signed(&odd).is_err());
        let neg = ParameterVector::new(vec![1.0, -0.1]).unwrap();
        assert!(merge_signed(&neg).is_err());
    }

    #[test]
    fn signed_design_preserves_predictions() {
        let data = Dataset::new(vec![0.0, 0.3, 0.8], vec![0.1, 0.2, 0.3]).unwrap();
        let spec = ModelSpec::new(2, 1.0).unwrap();
        let ls = LeastSquares::signed_polynomial(&data, &spec).unwrap();
        let split = [0.4, 0.0, 0.1, 0.5];
        let merged = merge_signed(&ParameterVector::new(split.to_vec()).unwrap()).unwrap();
        let fitted = ls.design() * DVector::from_column_slice(&split);
        for (r, &x) in data.inputs().iter().enumerate() {
            assert_relative_eq!(fitted[r], predict(&merged, x), epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn split_merge_round_trip(v in prop::collection::vec(-1e6f64..1e6, 1..12)) {
            let split = split_signed(&v);
            prop_assert!(split.as_slice().iter().all(|t| *t >= 0.0));
            prop_assert_eq!(merge_signed(&split).unwrap(), v.clone());
            let l1: f64 = v.iter().map(|t| t.abs()).sum();
            let total: f64 = split.as_slice().iter().sum();
            prop_assert!((l1 - total).abs() <= 1e-9 * l1.max(1.0));
        }

        #[test]
        fn predict_is_linear(
            a in prop::collection::vec(-10.0f64..10.0, 4),
            b in prop::collection::vec(-10.0f64..10.0, 4),
            s in -5.0f64..5.0,
            x in -2.0f64..2.0,
        ) {
            let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| p + s * q).collect();
            let lhs = predict(&combo, x);
            let rhs = predict(&a, x) + s * predict(&b, x);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }

        #[test]
        fn rescale_preserves_ratios(raw in prop::collection::vec(0.01f64..1.0, 2..8), c in 0.1f64..10.0) {
            let w = SimplexVector::normalized(raw).unwrap();
            let t = rescale(&w, c);
            let total: f64 = t.as_slice().iter().sum();
            prop_assert!((total - c).abs() <= 1e-12 * c);
            let (wi, wj) = (w.as_slice()[0], w.as_slice()[1]);
            let (ti, tj) = (t.as_slice()[0], t.as_slice()[1]);
            prop_assert!((ti / tj - wi / wj).abs() <= 1e-12 * (wi / wj));
        }

        #[test]
        fn likelihood_decreases_with_rss(shift in 0.01f64..5.0) {
            let spec = ModelSpec::new(2, 1.0).unwrap();
            let w = SimplexVector::new(vec![0.5, 0.5]).unwrap();
            let base = Dataset::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
            let worse = Dataset::new(vec![0.0, 1.0], vec![0.5 + shift, 1.0]).unwrap();
            let lb = log_likelihood(&base, &w, &spec).unwrap();
            let lw = log_likelihood(&worse, &w, &spec).unwrap();
            prop_assert!(lw < lb);
        }
    }
}

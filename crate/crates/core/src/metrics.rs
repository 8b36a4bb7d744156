//! Fit-quality metrics and the paired t-test.

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::error::{BalsonError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub mse: f64,
    pub sparsity: f64,
}

/// Mean squared difference between two equal-length, nonempty series.
pub fn mse(actual: &[f64], fitted: &[f64]) -> Result<f64> {
    if actual.len() != fitted.len() {
        return Err(BalsonError::DimensionMismatch {
            expected: actual.len(),
            actual: fitted.len(),
        });
    }
    if actual.is_empty() {
        return Err(BalsonError::invalid("actual", "empty series"));
    }
    let sse: f64 = actual
        .iter()
        .zip(fitted)
        .map(|(a, f)| (a - f) * (a - f))
        .sum();
    Ok(sse / actual.len() as f64)
}

/// Hoyer sparsity `(sqrt(K) - ||v||_1 / ||v||_2) / (sqrt(K) - 1)`:
/// 1 for a one-hot vector, 0 when all magnitudes are equal.
pub fn sparsity(theta: &[f64]) -> Result<f64> {
    if theta.len() < 2 {
        return Err(BalsonError::invalid("theta", "need at least 2 components"));
    }
    // scale by the largest magnitude so the L2 norm cannot overflow or underflow
    let scale = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if scale == 0.0 {
        return Err(BalsonError::SparsityUndefined);
    }
    if !scale.is_finite() {
        return Err(BalsonError::NonFinite("theta".into()));
    }
    let (l1, l2sq) = theta.iter().fold((0.0, 0.0), |(a, b), t| {
        let s = t.abs() / scale;
        (a + s, b + s * s)
    });
    let root_k = (theta.len() as f64).sqrt();
    let value = (root_k - l1 / l2sq.sqrt()) / (root_k - 1.0);
    Ok(value.clamp(0.0, 1.0))
}

/// One-sided upper tail `P(T > t)` of Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: u32) -> f64 {
    assert!(df >= 1, "degrees of freedom must be at least 1");
    if t.is_nan() {
        return f64::NAN;
    }
    if t == 0.0 {
        return 0.5;
    }
    let nu = df as f64;
    let x = nu / (nu + t * t);
    let tail = 0.5 * beta_reg(0.5 * nu, 0.5, x);
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub df: u32,
}

/// Paired t-test on `a - b` with the (n-1)-denominator standard deviation.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(BalsonError::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(BalsonError::invalid("a", "need at least 2 pairs"));
    }
    let n = a.len() as f64;
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    if var.is_nan() || var <= 0.0 {
        return Err(BalsonError::DegenerateTTest);
    }
    let t = mean / (var / n).sqrt();
    let df = a.len() as u32 - 1;
    Ok(TTest {
        t,
        p: (2.0 * student_t_sf(t.abs(), df)).min(1.0),
        df,
    })
}

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem;
use crate::error::{BalsonError, Result};
use crate::model::{Dataset, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LassoSettings {
    /// Allowed gap between `||theta||_1` and the budget.
    pub budget_tolerance: f64,
    pub max_bisections: usize,
    pub max_sweeps: usize,
    /// Sweeps stop once no coordinate moves by more than this (relative).
    pub sweep_tolerance: f64,
}

impl Default for LassoSettings {
    fn default() -> Self {
        LassoSettings {
            budget_tolerance: 1e-4,
            max_bisections: 200,
            max_sweeps: 1_000_000,
            sweep_tolerance: 1e-12,
        }
    }
}

impl LassoSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.budget_tolerance > 0.0 && self.sweep_tolerance > 0.0) {
            return Err(BalsonError::invalid("lasso", "tolerances must be positive"));
        }
        if self.max_sweeps == 0 || self.max_bisections == 0 {
            return Err(BalsonError::invalid("lasso", "iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub theta: Vec<f64>,
    pub lambda: f64,
    pub sweeps: usize,
    /// Objective after each sweep.
    pub objective_history: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `||y - A theta||^2 + lambda ||theta||_1`, up to the constant `||y||^2`.
fn objective(gram: &DMatrix<f64>, cross: &DVector<f64>, theta: &[f64], lambda: f64) -> f64 {
    let k = theta.len();
    let mut v = 0.0;
    for i in 0..k {
        let row: f64 = (0..k).map(|j| gram[(i, j)] * theta[j]).sum();
        v += theta[i] * row - 2.0 * cross[i] * theta[i] + lambda * theta[i].abs();
    }
    v
}

/// Cyclic coordinate descent with soft-thresholding on the Gram form
/// `theta^T G theta - 2 b^T theta + lambda ||theta||_1`. The quadratic term
/// is not halved, so each coordinate is thresholded at `lambda / 2`.
/// `target_energy` (`||y||^2`) is only used to report the residual norm
/// when the sweep cap is hit.
pub fn coordinate_descent(
    gram: &DMatrix<f64>,
    cross: &DVector<f64>,
    target_energy: f64,
    lambda: f64,
    warm_start: Option<&[f64]>,
    settings: &LassoSettings,
) -> Result<LassoSolution> {
    let k = cross.len();
    let mut theta = warm_start.map_or_else(|| vec![0.0; k], <[f64]>::to_vec);
    let mut history = Vec::new();
    for sweep in 1..=settings.max_sweeps {
        let mut max_step = 0.0f64;
        for j in 0..k {
            let gjj = gram[(j, j)];
            let updated = if gjj > 0.0 {
                let partial: f64 = (0..k)
                    .filter(|&i| i != j)
                    .map(|i| gram[(j, i)] * theta[i])
                    .sum();
                soft_threshold(cross[j] - partial, 0.5 * lambda) / gjj
            } else {
                0.0
            };
            max_step = max_step.max((updated - theta[j]).abs());
            theta[j] = updated;
        }
        history.push(objective(gram, cross, &theta, lambda));
        let scale = theta.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        if max_step <= settings.sweep_tolerance * scale {
            return Ok(LassoSolution {
                theta,
                lambda,
                sweeps: sweep,
                objective_history: history,
            });
        }
    }
    let rss = target_energy + objective(gram, cross, &theta, 0.0);
    Err(BalsonError::NoConvergence {
        sweeps: settings.max_sweeps,
        residual_norm: rss.max(0.0).sqrt(),
    })
}

fn l1(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.abs()).sum()
}

/// LASSO with the penalty chosen by bisection so that `||theta||_1`
/// matches the budget. When the unpenalized least-squares solution is
/// already within budget it is returned with `lambda = 0`.
pub fn lasso_fit(data: &Dataset, spec: &ModelSpec, settings: &LassoSettings) -> Result<LassoSolution> {
    settings.validate()?;
    let ls = problem(data, spec)?;
    let budget = spec.budget;

    let k = ls.dim();
    if ls.observations() > 0 {
        let svd = ls.design().clone().svd(true, true);
        let eps = svd.singular_values.max() * f64::EPSILON * ls.observations().max(k) as f64;
        let ols = svd.solve(ls.targets(), eps).expect("singular vectors computed");
        if l1(ols.as_slice()) <= budget {
            return Ok(LassoSolution {
                theta: ols.as_slice().to_vec(),
                lambda: 0.0,
                sweeps: 0,
                objective_history: Vec::new(),
            });
        }
    } else {
        return Ok(LassoSolution {
            theta: vec![0.0; k],
            lambda: 0.0,
            sweeps: 0,
            objective_history: Vec::new(),
        });
    }

    // at lambda >= 2 max|b_j| the zero vector satisfies the optimality conditions
    let energy = ls.targets().norm_squared();
    let mut hi = 2.0 * ls.cross().amax();
    let mut lo = 0.0;
    let mut best = coordinate_descent(ls.gram(), ls.cross(), energy, hi, None, settings)?;
    for _ in 0..settings.max_bisections {
        let mid = 0.5 * (lo + hi);
        let sol = coordinate_descent(ls.gram(), ls.cross(), energy, mid, Some(&best.theta), settings)?;
        let norm = l1(&sol.theta);
        if (norm - budget).abs() <= settings.budget_tolerance {
            return Ok(sol);
        }
        if norm > budget {
            lo = mid;
        } else {
            hi = mid;
            best = sol;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(best)
}

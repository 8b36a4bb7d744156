use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::problem;
use crate::error::{BalsonError, Result};
use crate::model::{Dataset, LeastSquares, ModelSpec, ParameterVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InteriorPointSettings {
    pub initial_mu: f64,
    /// Multiplier applied to the barrier weight after each outer iteration.
    pub decrease: f64,
    /// Inner loop stops when the largest Newton step component drops below this.
    pub newton_tolerance: f64,
    /// Outer loop stops when `(K + 1) * mu` drops below this.
    pub gap_tolerance: f64,
    pub max_outer: usize,
    pub max_newton: usize,
}

impl Default for InteriorPointSettings {
    fn default() -> Self {
        InteriorPointSettings {
            initial_mu: 1.0,
            decrease: 0.2,
            newton_tolerance: 1e-8,
            gap_tolerance: 1e-9,
            max_outer: 200,
            max_newton: 200,
        }
    }
}

impl InteriorPointSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial_mu > 0.0 && self.newton_tolerance > 0.0 && self.gap_tolerance > 0.0) {
            return Err(BalsonError::invalid("ip", "tolerances must be positive"));
        }
        if !(self.decrease > 0.0 && self.decrease < 1.0) {
            return Err(BalsonError::invalid("ip", "decrease factor must lie in (0, 1)"));
        }
        if self.max_outer == 0 || self.max_newton == 0 {
            return Err(BalsonError::invalid("ip", "iteration caps must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSolution {
    pub theta: Vec<f64>,
    pub final_mu: f64,
    pub outer_iterations: usize,
    pub newton_steps: usize,
    /// Smallest of all `theta_i` and `C - sum(theta)` seen over every iterate.
    pub min_slack: f64,
}

/// `RSS(theta) - mu * (sum ln theta_i + ln(C - sum theta_i))`.
fn barrier_value(ls: &LeastSquares, theta: &[f64], mu: f64) -> f64 {
    let slack = ls.budget() - theta.iter().sum::<f64>();
    if slack <= 0.0 || theta.iter().any(|t| *t <= 0.0) {
        return f64::INFINITY;
    }
    let logs: f64 = theta.iter().map(|t| t.ln()).sum::<f64>() + slack.ln();
    ls.rss(theta) - mu * logs
}

/// Primal log-barrier method for `min RSS(theta)` over
/// `{theta >= 0, sum(theta) <= C}` with damped Newton inner steps.
pub fn barrier_solve(ls: &LeastSquares, settings: &InteriorPointSettings) -> Result<BarrierSolution> {
    settings.validate()?;
    let k = ls.dim();
    let budget = ls.budget();
    let gram2 = ls.gram() * 2.0;
    let cross2 = ls.cross() * 2.0;

    let mut theta = vec![budget / (k as f64 + 1.0); k];
    let mut mu = settings.initial_mu;
    let mut newton_steps = 0;
    let mut min_slack = budget / (k as f64 + 1.0);

    for outer in 1..=settings.max_outer {
        let mut converged = false;
        for _ in 0..settings.max_newton {
            let slack = budget - theta.iter().sum::<f64>();
            let th = DVector::from_column_slice(&theta);
            let mut grad = &gram2 * &th - &cross2;
            let mut hess: DMatrix<f64> = gram2.clone();
            let inv_s = 1.0 / slack;
            for i in 0..k {
                grad[i] += -mu / theta[i] + mu * inv_s;
                hess[(i, i)] += mu / (theta[i] * theta[i]);
                for j in 0..k {
                    hess[(i, j)] += mu * inv_s * inv_s;
                }
            }
            let chol = hess.cholesky().ok_or(BalsonError::NewtonFailure { mu })?;
            let step = -chol.solve(&grad);
            let decrement = -grad.dot(&step);
            if !decrement.is_finite() {
                return Err(BalsonError::NewtonFailure { mu });
            }
            if step.amax() <= settings.newton_tolerance {
                converged = true;
                break;
            }

            // largest step keeping every theta_i and the slack strictly positive
            let mut t_max: f64 = 1.0;
            for i in 0..k {
                if step[i] < 0.0 {
                    t_max = t_max.min(-0.99 * theta[i] / step[i]);
                }
            }
            let step_sum = step.sum();
            if step_sum > 0.0 {
                t_max = t_max.min(0.99 * slack / step_sum);
            }

            let current = barrier_value(ls, &theta, mu);
            let mut t = t_max;
            let mut accepted = None;
            for _ in 0..60 {
                let cand: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, d)| a + t * d).collect();
                let v = barrier_value(ls, &cand, mu);
                if v <= current - 0.25 * t * decrement {
                    accepted = Some(cand);
                    break;
                }
                t *= 0.5;
            }
            let Some(next) = accepted else {
                // no descent at machine precision: the center is as good as it gets
                converged = true;
                break;
            };
            theta = next;
            newton_steps += 1;
            let slack = budget - theta.iter().sum::<f64>();
            min_slack = theta.iter().copied().fold(min_slack.min(slack), f64::min);
        }
        if !converged {
            return Err(BalsonError::NewtonFailure { mu });
        }
        if (k as f64 + 1.0) * mu < settings.gap_tolerance {
            return Ok(BarrierSolution {
                theta,
                final_mu: mu,
                outer_iterations: outer,
                newton_steps,
                min_slack,
            });
        }
        mu *= settings.decrease;
    }
    Err(BalsonError::NewtonFailure { mu })
}

/// Interior-point fit of the nonnegative, budget-constrained polynomial.
pub fn ip_fit(data: &Dataset, spec: &ModelSpec, settings: &InteriorPointSettings) -> Result<ParameterVector> {
    let ls = problem(data, spec)?;
    let sol = barrier_solve(&ls, settings)?;
    ParameterVector::new(sol.theta)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_problem(y: &[f64], budget: f64) -> LeastSquares {
        let k = y.len();
        LeastSquares::new(DMatrix::identity(k, k), DVector::from_column_slice(y), budget).unwrap()
    }

    #[test]
    fn inactive_constraints_recover_least_squares() {
        let ls = identity_problem(&[0.2, 0.3], 1.0);
        let sol = barrier_solve(&ls, &InteriorPointSettings::default()).unwrap();
        assert!((sol.theta[0] - 0.2).abs() < 1e-6, "{sol:?}");
        assert!((sol.theta[1] - 0.3).abs() < 1e-6);
    }

    #[test]
    fn projection_onto_budget_set() {
        let ls = identity_problem(&[2.0, -1.0], 1.0);
        let sol = barrier_solve(&ls, &InteriorPointSettings::default()).unwrap();

        // brute-force oracle: best grid point of the feasible triangle
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let n = 1000;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let (a, b) = (i as f64 / n as f64, j as f64 / n as f64);
                let v = (a - 2.0).powi(2) + (b + 1.0).powi(2);
                if v < best.0 {
                    best = (v, a, b);
                }
            }
        }
        assert_eq!((best.1, best.2), (1.0, 0.0));
        assert!((sol.theta[0] - 1.0).abs() < 1e-6, "{:?}", sol.theta);
        assert!(sol.theta[1].abs() < 1e-6);
    }

    #[test]
    fn iterates_stay_strictly_feasible() {
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 0.9 * x * x * x + 0.7 * (((i * 7919) % 97) as f64 / 97.0 - 0.5))
            .collect();
        let data = Dataset::new(xs, ys).unwrap();
        let ls = LeastSquares::polynomial(&data, &ModelSpec::new(5, 1.0).unwrap()).unwrap();
        let sol = barrier_solve(&ls, &InteriorPointSettings::default()).unwrap();
        assert!(sol.min_slack > 0.0);
        assert!(sol.theta.iter().all(|t| *t > 0.0));
        assert!(sol.theta.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn bad_settings_rejected() {
        let s = InteriorPointSettings { decrease: 1.5, ..Default::default() };
        assert!(s.validate().is_err());
    }
}

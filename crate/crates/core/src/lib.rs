//! Least squares under a nonnegative L1-norm constraint, solved by
//! approximating the posterior over the scaled simplex with a Dirichlet.
//!
//! The constrained problem
//!
//! ```text
//! min ||y - f(x; theta)||^2   s.t.  sum(theta) <= C,  theta >= 0
//! ```
//!
//! is rewritten with `theta = C * omega`, `omega` on the simplex. A unit-variance
//! Gaussian likelihood and a Dirichlet prior give a posterior over `omega`;
//! its first two moments are estimated by Monte Carlo ([`samplers`]), matched
//! to a Dirichlet, and the Dirichlet's mode (which is exactly zero wherever
//! a concentration is at most one) is scaled back by `C`.
//!
//! ```no_run
//! use balson_core::{solve, BalsonConfig, BalsonMethod, Dataset, ModelSpec, SamplerConfig};
//!
//! let xs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
//! let ys: Vec<f64> = xs.iter().map(|x| x * x * x).collect();
//! let data = Dataset::new(xs, ys).unwrap();
//! let spec = ModelSpec::new(5, 1.0).unwrap();
//! let cfg = BalsonConfig::new(BalsonMethod::Rsirs, spec, SamplerConfig::default()).unwrap();
//! let fit = solve(&data, &cfg).unwrap();
//! println!("{:?}", fit.theta_star);
//! ```

pub mod baselines;
pub mod dirichlet;
mod error;
pub mod experiment;
pub mod metrics;
pub mod model;
pub mod rng;
pub mod samplers;
pub mod solver;

pub use dirichlet::{DirichletParams, SimplexVector};
pub use error::{BalsonError, Result};
pub use experiment::{ExperimentConfig, Method, ResultTable, RunRow, Summary};
pub use metrics::{mse, paired_t_test, sparsity, student_t_sf, MetricPair, TTest};
pub use model::{Dataset, LeastSquares, ModelSpec, ParameterVector};
pub use rng::RandomStream;
pub use samplers::{SamplerConfig, WeightedSampleSet};
pub use solver::{solve, solve_signed, BalsonConfig, BalsonMethod, FitReport, SignedFit};

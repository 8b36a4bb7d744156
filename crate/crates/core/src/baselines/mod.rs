//! Reference solvers: budget-matched LASSO, a primal log-barrier
//! interior-point method, and a Gibbs-sampled Bayesian LASSO.

mod bayes_lasso;
mod interior_point;
mod lasso;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BalsonError, Result};
use crate::model::{Dataset, LeastSquares, ModelSpec};

pub use bayes_lasso::{bayesian_lasso_fit, gibbs_posterior_mean, GibbsSettings};
pub use interior_point::{barrier_solve, ip_fit, BarrierSolution, InteriorPointSettings};
pub use lasso::{coordinate_descent, lasso_fit, LassoSettings, LassoSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineMethod {
    #[serde(rename = "LASSO")]
    Lasso,
    #[serde(rename = "IP")]
    InteriorPoint,
    #[serde(rename = "BayesianLASSO")]
    BayesianLasso,
}

impl BaselineMethod {
    pub const ALL: [BaselineMethod; 3] = [
        BaselineMethod::Lasso,
        BaselineMethod::InteriorPoint,
        BaselineMethod::BayesianLasso,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineMethod::Lasso => "LASSO",
            BaselineMethod::InteriorPoint => "IP",
            BaselineMethod::BayesianLasso => "BayesianLASSO",
        }
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineMethod {
    type Err = BalsonError;
    fn from_str(s: &str) -> Result<Self> {
        BaselineMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BalsonError::invalid("method", format!("unknown baseline `{s}`")))
    }
}

/// Settings for all three baselines. The budget comes from [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub lasso: LassoSettings,
    pub ip: InteriorPointSettings,
    pub gibbs: GibbsSettings,
}

impl BaselineConfig {
    pub fn validate(&self) -> Result<()> {
        self.lasso.validate()?;
        self.ip.validate()?;
        self.gibbs.validate()
    }
}

/// Runs one baseline and returns its (possibly signed) coefficients.
pub fn fit_baseline(
    method: BaselineMethod,
    data: &Dataset,
    spec: &ModelSpec,
    cfg: &BaselineConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    match method {
        BaselineMethod::Lasso => lasso_fit(data, spec, &cfg.lasso).map(|s| s.theta),
        BaselineMethod::InteriorPoint => ip_fit(data, spec, &cfg.ip).map(|p| p.into_inner()),
        BaselineMethod::BayesianLasso => {
            let mut rng = crate::rng::substream(seed, 0);
            bayesian_lasso_fit(data, spec, &cfg.gibbs, &mut rng)
        }
    }
}

fn problem(data: &Dataset, spec: &ModelSpec) -> Result<LeastSquares> {
    LeastSquares::polynomial(data, spec)
}

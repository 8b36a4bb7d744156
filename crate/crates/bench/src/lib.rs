//! Fixtures shared by the benchmarks.

use balson_core::experiment::{generate_dataset, ExperimentConfig};
use balson_core::{Dataset, LeastSquares};

/// Training set of repetition 0 of the default experiment.
pub fn reference_dataset() -> Dataset {
    generate_dataset(&ExperimentConfig::default(), 0)
        .expect("default config is valid")
        .train
}

pub fn reference_problem() -> LeastSquares {
    let cfg = ExperimentConfig::default();
    LeastSquares::polynomial(&reference_dataset(), &cfg.spec()).expect("default config is valid")
}

//! The polynomial-fitting benchmark: synthetic data generation, repeated
//! multi-method runs, and paired significance summaries.
//!
//! Noise is regenerated for every repetition and shared by all methods
//! within a repetition, so per-repetition metric differences form the
//! pairs of the t-tests.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, BaselineConfig, BaselineMethod};
use crate::dirichlet::DirichletParams;
use crate::error::{BalsonError, Result};
use crate::metrics::{mse, paired_t_test, sparsity};
use crate::model::{predict, Dataset, ModelSpec};
use crate::rng::{derive_seed, substream};
use crate::samplers::SamplerConfig;
use crate::solver::{solve, BalsonConfig, BalsonMethod};

/// Coefficients of the reference cubic-dominated polynomial.
pub const REFERENCE_THETA: [f64; 5] = [0.0013, 0.0380, 0.0102, 0.9082, 0.0423];

/// How "repeated with the same data" is read by this harness.
pub const DATA_INTERPRETATION: &str =
    "noise regenerated per repetition from (base_seed, repetition); shared by all methods within a repetition";

const DATA_STREAM: u64 = 0xDA7A;
const METHOD_STREAM: u64 = 0x3E7D;

/// Any method the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Baseline(BaselineMethod),
    Balson(BalsonMethod),
}

impl Method {
    /// Canonical ordering: the three baselines, then RS, IS, RSIRS, ISIRS.
    pub const ALL: [Method; 7] = [
        Method::Baseline(BaselineMethod::Lasso),
        Method::Baseline(BaselineMethod::InteriorPoint),
        Method::Baseline(BaselineMethod::BayesianLasso),
        Method::Balson(BalsonMethod::Rs),
        Method::Balson(BalsonMethod::Is),
        Method::Balson(BalsonMethod::Rsirs),
        Method::Balson(BalsonMethod::Isirs),
    ];

    pub fn index(self) -> usize {
        Method::ALL.iter().position(|m| *m == self).expect("ALL lists every method")
    }

    pub fn name(self) -> String {
        match self {
            Method::Baseline(b) => b.name().to_string(),
            Method::Balson(m) => format!("BALSON-{}", m.name().to_ascii_uppercase()),
        }
    }

    pub fn is_balson(self) -> bool {
        matches!(self, Method::Balson(_))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Method {
    type Err = BalsonError;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BalsonError::invalid("method", format!("unknown method `{s}`")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub true_theta: Vec<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub budget: f64,
    pub repetitions: usize,
    pub methods: Vec<Method>,
    /// `seed` is ignored here; each run gets a derived seed.
    pub sampler: SamplerConfig,
    pub baselines: BaselineConfig,
    pub base_seed: u64,
    pub noise_std: f64,
    /// Run repetitions on the rayon pool. Output is identical either way.
    pub parallel: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            true_theta: REFERENCE_THETA.to_vec(),
            n_train: 100,
            n_test: 1000,
            budget: 1.0,
            repetitions: 100,
            methods: Method::ALL.to_vec(),
            sampler: SamplerConfig::default(),
            baselines: BaselineConfig::default(),
            base_seed: 0,
            noise_std: 1.0,
            parallel: true,
            output_dir: None,
        }
    }
}

impl ExperimentConfig {
    pub fn order(&self) -> usize {
        self.true_theta.len()
    }

    pub fn spec(&self) -> ModelSpec {
        ModelSpec {
            order: self.order(),
            budget: self.budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec().validate()?;
        if self.true_theta.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(BalsonError::invalid("true_theta", "must be finite and nonnegative"));
        }
        if self.n_train < self.order() {
            return Err(BalsonError::invalid("n_train", "need at least K training points"));
        }
        if self.n_test == 0 {
            return Err(BalsonError::invalid("n_test", "need at least one test point"));
        }
        if self.repetitions == 0 {
            return Err(BalsonError::invalid("repetitions", "need at least one repetition"));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return Err(BalsonError::invalid("noise_std", "must be finite and nonnegative"));
        }
        self.sampler.validate()?;
        self.baselines.validate()
    }

    /// Seed of the noise stream for `repetition`.
    pub fn data_seed(&self, repetition: usize) -> u64 {
        derive_seed(self.base_seed, &[DATA_STREAM, repetition as u64])
    }

    /// Seed handed to `method` in `repetition`; independent of which other
    /// methods are enabled.
    pub fn method_seed(&self, method: Method, repetition: usize) -> u64 {
        derive_seed(
            self.base_seed,
            &[METHOD_STREAM, repetition as u64, method.index() as u64],
        )
    }
}

/// `n` points from 0 to 1 inclusive at fixed spacing.
pub fn equispaced(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| i as f64 / (n - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub train: Dataset,
    pub test_inputs: Vec<f64>,
    /// Noise-free curve at `test_inputs`.
    pub test_truth: Vec<f64>,
}

pub fn generate_dataset(cfg: &ExperimentConfig, repetition: usize) -> Result<GeneratedData> {
    let mut rng = substream(cfg.data_seed(repetition), 0);
    let inputs = equispaced(cfg.n_train);
    let targets = inputs
        .iter()
        .map(|&x| predict(&cfg.true_theta, x) + cfg.noise_std * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let test_inputs = equispaced(cfg.n_test);
    let test_truth = test_inputs.iter().map(|&x| predict(&cfg.true_theta, x)).collect();
    Ok(GeneratedData {
        train: Dataset::new(inputs, targets)?,
        test_inputs,
        test_truth,
    })
}

/// Selected BALSON diagnostics carried into the result table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub acceptance_rate: Option<f64>,
    pub final_ess: f64,
    pub final_concentration: f64,
    pub mode_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub method: Method,
    pub repetition: usize,
    pub seed: u64,
    pub dataset_hash: u64,
    pub theta: Option<Vec<f64>>,
    pub mse: Option<f64>,
    pub sparsity: Option<f64>,
    pub diagnostics: Option<RunDiagnostics>,
    pub error: Option<String>,
    pub wall_clock_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedLedger {
    pub base_seed: u64,
    /// Noise seed per repetition.
    pub data_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub config: ExperimentConfig,
    pub data_interpretation: String,
    pub seeds: SeedLedger,
    /// Sorted by (method, repetition).
    pub rows: Vec<RunRow>,
}

impl ResultTable {
    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &RunRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Distinct methods in canonical order.
    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.rows.iter().map(|r| r.method).collect();
        m.sort_by_key(|m| m.index());
        m.dedup();
        m
    }
}

fn fit_method(
    cfg: &ExperimentConfig,
    method: Method,
    data: &Dataset,
    seed: u64,
) -> Result<(Vec<f64>, Option<RunDiagnostics>)> {
    let spec = cfg.spec();
    match method {
        Method::Baseline(b) => Ok((fit_baseline(b, data, &spec, &cfg.baselines, seed)?, None)),
        Method::Balson(m) => {
            let bcfg = BalsonConfig {
                method: m,
                prior: DirichletParams::uniform(spec.order)?,
                spec,
                sampler: SamplerConfig { seed, ..cfg.sampler },
            };
            let fit = solve(data, &bcfg)?;
            let last = fit.diagnostics.rounds.last().expect("at least one round");
            let diag = RunDiagnostics {
                acceptance_rate: fit.diagnostics.acceptance_rate(),
                final_ess: last.ess,
                final_concentration: last.concentration,
                mode_fallback: fit.diagnostics.mode_fallback,
            };
            Ok((fit.theta_star.into_inner(), Some(diag)))
        }
    }
}

fn run_one(cfg: &ExperimentConfig, method: Method, repetition: usize) -> RunRow {
    let start = Instant::now();
    let seed = cfg.method_seed(method, repetition);
    let mut row = RunRow {
        method,
        repetition,
        seed,
        dataset_hash: 0,
        theta: None,
        mse: None,
        sparsity: None,
        diagnostics: None,
        error: None,
        wall_clock_secs: 0.0,
    };
    let outcome = generate_dataset(cfg, repetition).and_then(|data| {
        row.dataset_hash = data.train.fingerprint();
        let (theta, diag) = fit_method(cfg, method, &data.train, seed)?;
        row.theta = Some(theta.clone());
        row.diagnostics = diag;
        let fitted: Vec<f64> = data.test_inputs.iter().map(|&x| predict(&theta, x)).collect();
        row.mse = Some(mse(&data.test_truth, &fitted)?);
        row.sparsity = Some(sparsity(&theta)?);
        Ok(())
    });
    if let Err(e) = outcome {
        log::warn!("{method} repetition {repetition} failed: {e}");
        row.error = Some(e.to_string());
    }
    row.wall_clock_secs = start.elapsed().as_secs_f64();
    row
}

/// Runs every enabled method on every repetition. Individual failures are
/// recorded in their rows; the run itself fails only on invalid config.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultTable> {
    cfg.validate()?;
    let mut methods = cfg.methods.clone();
    methods.sort_by_key(|m| m.index());
    methods.dedup();
    let jobs: Vec<(Method, usize)> = methods
        .iter()
        .flat_map(|&m| (0..cfg.repetitions).map(move |r| (m, r)))
        .collect();
    let mut rows: Vec<RunRow> = if cfg.parallel {
        jobs.par_iter().map(|&(m, r)| run_one(cfg, m, r)).collect()
    } else {
        jobs.iter().map(|&(m, r)| run_one(cfg, m, r)).collect()
    };
    rows.sort_by_key(|r| (r.method.index(), r.repetition));
    Ok(ResultTable {
        config: cfg.clone(),
        data_interpretation: DATA_INTERPRETATION.to_string(),
        seeds: SeedLedger {
            base_seed: cfg.base_seed,
            data_seeds: (0..cfg.repetitions).map(|r| cfg.data_seed(r)).collect(),
        },
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Sparsity,
}

impl Metric {
    fn of(self, row: &RunRow) -> Option<f64> {
        match self {
            Metric::Mse => row.mse,
            Metric::Sparsity => row.sparsity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum PValueCell {
    Value { t: f64, p: f64, pairs: usize },
    Degenerate,
    Unavailable { reason: String },
}

impl PValueCell {
    pub fn p(&self) -> Option<f64> {
        match self {
            PValueCell::Value { p, .. } => Some(*p),
            _ => None,
        }
    }
}

/// Paired t-test of `a` against `b` over repetitions where both succeeded.
pub fn compare(table: &ResultTable, a: Method, b: Method, metric: Metric) -> PValueCell {
    let lookup = |m: Method| -> std::collections::BTreeMap<usize, f64> {
        table
            .rows_for(m)
            .filter_map(|r| metric.of(r).map(|v| (r.repetition, v)))
            .collect()
    };
    let (va, vb) = (lookup(a), lookup(b));
    let (xs, ys): (Vec<f64>, Vec<f64>) = va
        .iter()
        .filter_map(|(rep, x)| vb.get(rep).map(|y| (*x, *y)))
        .unzip();
    if xs.len() < 2 {
        return PValueCell::Unavailable {
            reason: format!("{} paired repetitions", xs.len()),
        };
    }
    match paired_t_test(&xs, &ys) {
        Ok(r) => PValueCell::Value {
            t: r.t,
            p: r.p,
            pairs: xs.len(),
        },
        Err(BalsonError::DegenerateTTest) => PValueCell::Degenerate,
        Err(e) => PValueCell::Unavailable {
            reason: e.to_string(),
        },
    }
}

/// BALSON variants (rows) against baselines (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueMatrix {
    pub metric: Metric,
    pub rows: Vec<Method>,
    pub columns: Vec<Method>,
    pub cells: Vec<Vec<PValueCell>>,
}

impl PValueMatrix {
    pub fn get(&self, row: Method, column: Method) -> Option<&PValueCell> {
        let r = self.rows.iter().position(|m| *m == row)?;
        let c = self.columns.iter().position(|m| *m == column)?;
        Some(&self.cells[r][c])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_mse: Option<f64>,
    pub mean_sparsity: Option<f64>,
    pub median_mse: Option<f64>,
    pub median_sparsity: Option<f64>,
    pub succeeded: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub methods: Vec<MethodSummary>,
    pub pvalues_mse: PValueMatrix,
    pub pvalues_sparsity: PValueMatrix,
}

impl Summary {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    })
}

/// Per-method means and medians plus the BALSON-vs-baseline p-value tables.
pub fn summarize(table: &ResultTable) -> Summary {
    let methods = table.methods();
    let per_method = methods
        .iter()
        .map(|&m| {
            let rows: Vec<&RunRow> = table.rows_for(m).collect();
            let mses: Vec<f64> = rows.iter().filter_map(|r| r.mse).collect();
            let sps: Vec<f64> = rows.iter().filter_map(|r| r.sparsity).collect();
            MethodSummary {
                method: m,
                mean_mse: mean(&mses),
                mean_sparsity: mean(&sps),
                median_mse: median(&mses),
                median_sparsity: median(&sps),
                succeeded: rows.iter().filter(|r| r.error.is_none()).count(),
                failed: rows.iter().filter(|r| r.error.is_some()).count(),
            }
        })
        .collect();
    let balson: Vec<Method> = methods.iter().copied().filter(|m| m.is_balson()).collect();
    let baselines: Vec<Method> = methods.iter().copied().filter(|m| !m.is_balson()).collect();
    let matrix = |metric: Metric| PValueMatrix {
        metric,
        rows: balson.clone(),
        columns: baselines.clone(),
        cells: balson
            .iter()
            .map(|&a| baselines.iter().map(|&b| compare(table, a, b, metric)).collect())
            .collect(),
    };
    Summary {
        methods: per_method,
        pvalues_mse: matrix(Metric::Mse),
        pvalues_sparsity: matrix(Metric::Sparsity),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> ExperimentConfig {
        ExperimentConfig {
            repetitions: 2,
            n_test: 50,
            sampler: SamplerConfig {
                resample_rounds: 2,
                ..SamplerConfig::with_samples(500)
            },
            baselines: BaselineConfig {
                gibbs: crate::baselines::GibbsSettings {
                    iterations: 300,
                    burn_in: 50,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn method_names() {
        let names: Vec<String> = Method::ALL.iter().map(|m| m.name()).collect();
        assert_eq!(
            names,
            ["LASSO", "IP", "BayesianLASSO", "BALSON-RS", "BALSON-IS", "BALSON-RSIRS", "BALSON-ISIRS"]
        );
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("BALSON-MCMC".parse::<Method>().is_err());
    }

    #[test]
    fn equispaced_inputs() {
        assert_eq!(equispaced(3), vec![0.0, 0.5, 1.0]);
        assert_eq!(equispaced(1), vec![0.0]);
        assert!(equispaced(0).is_empty());
    }

    #[test]
    fn generated_data_layout() {
        let cfg = ExperimentConfig { n_train: 3, ..Default::default() };
        let d = generate_dataset(&cfg, 0).unwrap();
        assert_eq!(d.train.inputs(), &[0.0, 0.5, 1.0]);
        assert_eq!(d.test_inputs.len(), 1000);
        assert_eq!(d.test_truth[0], 0.0013);

        let a = generate_dataset(&ExperimentConfig::default(), 0).unwrap();
        let b = generate_dataset(&ExperimentConfig::default(), 1).unwrap();
        assert_eq!(a.train.inputs(), b.train.inputs());
        assert_ne!(a.train.targets(), b.train.targets());
        assert_eq!(a, generate_dataset(&ExperimentConfig::default(), 0).unwrap());
    }

    #[test]
    fn table_shape_and_shared_data() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Balson(BalsonMethod::Rs), Method::Baseline(BaselineMethod::Lasso)],
            ..quick_config()
        };
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 4);
        assert_eq!(table.rows[0].method, Method::Baseline(BaselineMethod::Lasso));
        for rep in 0..2 {
            let hashes: Vec<u64> = table
                .rows
                .iter()
                .filter(|r| r.repetition == rep)
                .map(|r| r.dataset_hash)
                .collect();
            assert!(hashes.windows(2).all(|w| w[0] == w[1]));
        }
        assert_ne!(table.rows[0].dataset_hash, table.rows[1].dataset_hash);
    }

    #[test]
    fn parallel_matches_sequential() {
        let cfg = quick_config();
        let strip = |t: ResultTable| -> Vec<RunRow> {
            t.rows
                .into_iter()
                .map(|mut r| {
                    r.wall_clock_secs = 0.0;
                    r
                })
                .collect()
        };
        let par = strip(run_experiment(&cfg).unwrap());
        let seq = strip(run_experiment(&ExperimentConfig { parallel: false, ..cfg }).unwrap());
        assert_eq!(par, seq);
        assert_eq!(par.len(), 14);
    }

    #[test]
    fn failures_are_recorded_not_fatal() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Balson(BalsonMethod::Rs)],
            noise_std: 50.0,
            sampler: SamplerConfig {
                sample_count: 100,
                max_proposals: 100,
                resample_rounds: 1,
                seed: 0,
            },
            ..quick_config()
        };
        let table = run_experiment(&cfg).unwrap();
        assert_eq!(table.rows.len(), 2);
        assert!(table.rows.iter().all(|r| r.error.is_some()));
        let s = summarize(&table);
        assert_eq!(s.methods[0].failed, 2);
        assert_eq!(s.methods[0].mean_mse, None);
    }

    #[test]
    fn summary_layout() {
        let table = run_experiment(&quick_config()).unwrap();
        let s = summarize(&table);
        assert_eq!(s.methods.len(), 7);
        assert_eq!(s.pvalues_mse.rows.len(), 4);
        assert_eq!(s.pvalues_mse.columns.len(), 3);
        assert_eq!(s.pvalues_sparsity.cells.len(), 4);
        let lasso = Method::Baseline(BaselineMethod::Lasso);
        assert_eq!(compare(&table, lasso, lasso, Metric::Mse), PValueCell::Degenerate);
    }

    #[test]
    fn single_method_has_empty_matrices() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Baseline(BaselineMethod::InteriorPoint)],
            ..quick_config()
        };
        let s = summarize(&run_experiment(&cfg).unwrap());
        assert_eq!(s.methods.len(), 1);
        assert!(s.methods[0].mean_mse.is_some());
        assert!(s.pvalues_mse.cells.is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig { n_train: 3, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { true_theta: vec![0.5, -0.1], ..Default::default() };
        assert!(bad.validate().is_err());
    }
}

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use balson_core::dirichlet::{match_moments, moments, sample};
use balson_core::experiment::{run_experiment, summarize};
use balson_core::rng::substream;
use balson_core::samplers::weighted_moments;
use balson_core::samplers::WeightedSampleSet;
use balson_core::{
    solve, BalsonConfig, BalsonMethod, Dataset, DirichletParams, ExperimentConfig, FitReport, ModelSpec,
    SamplerConfig,
};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;
use crate::output::emit_outputs;

#[derive(Debug, Parser)]
#[command(name = "balson", version, about = "Budgeted nonnegative least squares via a Dirichlet posterior")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a polynomial to `x,y` data under a nonnegative L1 budget.
    Fit(FitArgs),
    /// Run the multi-method benchmark and write CSV (and SVG) reports.
    Bench(BenchArgs),
    /// Sample a Dirichlet prior and compare empirical and exact moments.
    SampleDiag(SampleDiagArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV file with header `x,y`.
    #[arg(long)]
    pub input: PathBuf,
    /// Number of polynomial coefficients K.
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value_t = 1.0)]
    pub budget: f64,
    #[arg(long, default_value = "rsirs")]
    pub method: BalsonMethod,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 5)]
    pub rounds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `uniform` or a comma-separated list of K concentrations.
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    /// Where to write the JSON report; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Experiment config as JSON; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub svg: bool,
}

#[derive(Debug, Args)]
pub struct SampleDiagArgs {
    #[arg(long)]
    pub order: usize,
    #[arg(long, default_value = "uniform")]
    pub prior: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `uniform` or `a,b,c` into a prior of length `order`.
pub fn parse_prior(text: &str, order: usize) -> Result<DirichletParams, Failure> {
    let prior = if text.trim().eq_ignore_ascii_case("uniform") {
        DirichletParams::uniform(order)?
    } else {
        let alpha = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Failure::usage(anyhow::anyhow!("--prior: {e}")))?;
        DirichletParams::new(alpha)?
    };
    if prior.len() != order {
        return Err(Failure::usage(anyhow::anyhow!(
            "--prior has {} components but --order is {order}",
            prior.len()
        )));
    }
    Ok(prior)
}

#[derive(Deserialize)]
struct Point {
    x: f64,
    y: f64,
}

pub fn read_dataset(path: &Path) -> Result<Dataset, Failure> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Failure::io(path, e))?;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (line, rec) in reader.deserialize::<Point>().enumerate() {
        let p = rec.map_err(|e| Failure::io(path, anyhow::anyhow!("record {}: {e}", line + 1)))?;
        xs.push(p.x);
        ys.push(p.y);
    }
    Ok(Dataset::new(xs, ys)?)
}

#[derive(Serialize)]
struct FitOutput<'a> {
    #[serde(flatten)]
    report: &'a FitReport,
    config: &'a BalsonConfig,
    seed: u64,
}

pub fn fit(args: &FitArgs) -> Result<FitReport, Failure> {
    let data = read_dataset(&args.input)?;
    let spec = ModelSpec::new(args.order, args.budget)?;
    let sampler = SamplerConfig {
        resample_rounds: args.rounds,
        seed: args.seed,
        ..SamplerConfig::with_samples(args.samples)
    };
    let cfg = BalsonConfig::new(args.method, spec, sampler)?.with_prior(parse_prior(&args.prior, args.order)?);
    let report = solve(&data, &cfg)?;
    let out = FitOutput {
        report: &report,
        config: &cfg,
        seed: args.seed,
    };
    let json = serde_json::to_string_pretty(&out).map_err(Failure::numerical)?;
    match &args.output {
        Some(path) => fs::write(path, json + "\n").map_err(|e| Failure::io(path, e))?,
        None => println!("{json}"),
    }
    Ok(report)
}

pub fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::usage(anyhow::Error::new(e).context(path.display().to_string())))
}

pub fn bench(args: &BenchArgs) -> Result<Vec<PathBuf>, Failure> {
    let mut cfg = load_config(args.config.as_deref())?;
    cfg.output_dir = Some(args.out_dir.clone());
    let table = run_experiment(&cfg)?;
    let summary = summarize(&table);
    for m in &summary.methods {
        log::info!(
            "{}: mean mse {:?}, mean sparsity {:?}, {} failed",
            m.method,
            m.mean_mse,
            m.mean_sparsity,
            m.failed
        );
    }
    emit_outputs(&table, &summary, &args.out_dir, args.svg)
}

/// Draws `samples` points from the prior and reports empirical against
/// exact moments, plus the concentrations recovered by moment matching.
pub fn sample_diag(args: &SampleDiagArgs) -> Result<String, Failure> {
    let prior = parse_prior(&args.prior, args.order)?;
    if args.samples < 2 {
        return Err(Failure::usage(anyhow::anyhow!("--samples must be at least 2")));
    }
    let mut rng = substream(args.seed, 0);
    let draws: Vec<_> = (0..args.samples).map(|_| sample(&prior, &mut rng)).collect();
    let weights = vec![1.0 / args.samples as f64; args.samples];
    let set = WeightedSampleSet::new(draws, weights)?;
    let (mean, var) = weighted_moments(&set)?;
    let (exact_mean, exact_var) = moments(&prior);
    let matched = match_moments(&mean, &var)?;

    let mut out = String::new();
    let _ = writeln!(out, "samples {}  seed {}  concentration {}", args.samples, args.seed, prior.concentration());
    let _ = writeln!(out, "i\talpha\tmean\tmean_exact\tvar\tvar_exact\talpha_matched");
    for i in 0..prior.len() {
        let _ = writeln!(
            out,
            "{i}\t{}\t{:.6}\t{:.6}\t{:.6e}\t{:.6e}\t{:.4}",
            prior.as_slice()[i],
            mean[i],
            exact_mean[i],
            var[i],
            exact_var[i],
            matched.as_slice()[i]
        );
    }
    let _ = writeln!(out, "matched concentration {:.4}", matched.concentration());
    Ok(out)
}

pub fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Fit(a) => fit(a).map(|_| ()),
        Command::Bench(a) => {
            for path in bench(a)? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::SampleDiag(a) => {
            print!("{}", sample_diag(a)?);
            Ok(())
        }
    }
}

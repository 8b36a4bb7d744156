//! Writes a finished experiment to disk as CSV tables, a config echo and
//! optional SVG charts.

use std::fs;
use std::path::{Path, PathBuf};

use balson_core::experiment::{equispaced, PValueCell, PValueMatrix, SeedLedger};
use balson_core::model::predict;
use balson_core::{ExperimentConfig, ResultTable, Summary};
use serde::Serialize;

use crate::failure::Failure;
use crate::svg;

/// Column that carries per-row timing in `runs.csv`.
pub const WALL_CLOCK_COLUMN: &str = "wall_clock_secs";

#[derive(Serialize)]
struct ConfigEcho<'a> {
    config: &'a ExperimentConfig,
    data_interpretation: &'a str,
    seeds: &'a SeedLedger,
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn write_csv(path: &Path, rows: Vec<Vec<String>>) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(&r).map_err(|e| Failure::io(path, e))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::io(path, anyhow::anyhow!("{e}")))?;
    write_file(path, &bytes)
}

fn runs_rows(table: &ResultTable) -> Vec<Vec<String>> {
    let k = table.config.order();
    let mut header: Vec<String> = ["method", "repetition", "seed", "dataset_hash", "status", "mse", "sparsity"]
        .map(String::from)
        .to_vec();
    header.extend((0..k).map(|i| format!("theta_{i}")));
    header.extend(
        ["acceptance_rate", "final_ess", "final_concentration", "mode_fallback", "error", WALL_CLOCK_COLUMN]
            .map(String::from),
    );
    let mut rows = vec![header];
    for r in &table.rows {
        let mut row = vec![
            r.method.name(),
            r.repetition.to_string(),
            r.seed.to_string(),
            format!("{:016x}", r.dataset_hash),
            if r.error.is_some() { "error" } else { "ok" }.to_string(),
            opt(r.mse),
            opt(r.sparsity),
        ];
        match &r.theta {
            Some(t) => row.extend(t.iter().copied().map(num)),
            None => row.extend(std::iter::repeat_n(String::new(), k)),
        }
        let d = r.diagnostics.as_ref();
        row.push(opt(d.and_then(|d| d.acceptance_rate)));
        row.push(opt(d.map(|d| d.final_ess)));
        row.push(opt(d.map(|d| d.final_concentration)));
        row.push(d.map(|d| d.mode_fallback.to_string()).unwrap_or_default());
        row.push(r.error.clone().unwrap_or_default());
        row.push(num(r.wall_clock_secs));
        rows.push(row);
    }
    rows
}

/// Metrics as rows, methods as columns.
fn summary_rows(summary: &Summary) -> Vec<Vec<String>> {
    let mut header = vec!["metric".to_string()];
    header.extend(summary.methods.iter().map(|m| m.method.name()));
    let line = |label: &str, f: &dyn Fn(&balson_core::experiment::MethodSummary) -> String| {
        let mut row = vec![label.to_string()];
        row.extend(summary.methods.iter().map(f));
        row
    };
    vec![
        header,
        line("mean_mse", &|m| opt(m.mean_mse)),
        line("mean_sparsity", &|m| opt(m.mean_sparsity)),
        line("median_mse", &|m| opt(m.median_mse)),
        line("median_sparsity", &|m| opt(m.median_sparsity)),
        line("succeeded", &|m| m.succeeded.to_string()),
        line("failed", &|m| m.failed.to_string()),
    ]
}

fn cell(c: &PValueCell) -> String {
    match c {
        PValueCell::Value { p, .. } => format!("{p:e}"),
        PValueCell::Degenerate => "degenerate".into(),
        PValueCell::Unavailable { .. } => "NA".into(),
    }
}

/// BALSON variants as rows, baselines as columns.
fn pvalue_rows(m: &PValueMatrix) -> Vec<Vec<String>> {
    let mut header = vec![String::new()];
    header.extend(m.columns.iter().map(|c| c.name()));
    let mut rows = vec![header];
    for (r, cells) in m.rows.iter().zip(&m.cells) {
        let mut row = vec![r.name()];
        row.extend(cells.iter().map(cell));
        rows.push(row);
    }
    rows
}

/// `x`, noise-free truth, then one fitted column per method, for repetition 0.
fn curve_columns(table: &ResultTable) -> (Vec<String>, Vec<f64>, Vec<Vec<Option<f64>>>) {
    let methods = table.methods();
    let xs = equispaced(table.config.n_test);
    let mut header = vec!["x".to_string(), "truth".to_string()];
    header.extend(methods.iter().map(|m| m.name()));
    let mut cols = vec![xs.iter().map(|&x| Some(predict(&table.config.true_theta, x))).collect()];
    for &m in &methods {
        let theta = table
            .rows_for(m)
            .find(|r| r.repetition == 0)
            .and_then(|r| r.theta.as_ref());
        cols.push(xs.iter().map(|&x| theta.map(|t| predict(t, x))).collect());
    }
    (header, xs, cols)
}

fn curves_rows(table: &ResultTable) -> Vec<Vec<String>> {
    let (header, xs, cols) = curve_columns(table);
    let mut rows = vec![header];
    for (i, &x) in xs.iter().enumerate() {
        let mut row = vec![num(x)];
        row.extend(cols.iter().map(|c| opt(c[i])));
        rows.push(row);
    }
    rows
}

fn curves_svg(table: &ResultTable) -> String {
    let (header, xs, cols) = curve_columns(table);
    let series: Vec<(String, Vec<(f64, f64)>)> = header[1..]
        .iter()
        .zip(&cols)
        .map(|(name, col)| {
            let pts = xs.iter().zip(col).filter_map(|(&x, y)| y.map(|y| (x, y))).collect();
            (name.clone(), pts)
        })
        .collect();
    svg::line_plot("Fitted curves, repetition 0", &series)
}

fn box_svg(table: &ResultTable, title: &str, pick: fn(&balson_core::RunRow) -> Option<f64>) -> String {
    let groups: Vec<(String, Vec<f64>)> = table
        .methods()
        .into_iter()
        .map(|m| (m.name(), table.rows_for(m).filter_map(pick).collect()))
        .collect();
    svg::box_plot(title, &groups)
}

/// Writes every artifact for `table` into `out_dir` (created if missing)
/// and returns the paths written, in order. With no methods configured
/// only the config echo is written.
pub fn emit_outputs(table: &ResultTable, summary: &Summary, out_dir: &Path, with_svg: bool) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(out_dir, e))?;
    let mut manifest = Vec::new();

    let echo = ConfigEcho {
        config: &table.config,
        data_interpretation: &table.data_interpretation,
        seeds: &table.seeds,
    };
    let path = out_dir.join("config.json");
    let json = serde_json::to_vec_pretty(&echo).map_err(|e| Failure::io(&path, e))?;
    write_file(&path, &json)?;
    manifest.push(path);

    if table.config.methods.is_empty() {
        return Ok(manifest);
    }

    let csvs = [
        ("runs.csv", runs_rows(table)),
        ("summary.csv", summary_rows(summary)),
        ("pvalues_mse.csv", pvalue_rows(&summary.pvalues_mse)),
        ("pvalues_sparsity.csv", pvalue_rows(&summary.pvalues_sparsity)),
        ("curves.csv", curves_rows(table)),
    ];
    for (name, rows) in csvs {
        let path = out_dir.join(name);
        write_csv(&path, rows)?;
        manifest.push(path);
    }

    if with_svg {
        let charts = [
            ("curves.svg", curves_svg(table)),
            ("boxplot_mse.svg", box_svg(table, "MSE", |r| r.mse)),
            ("boxplot_sparsity.svg", box_svg(table, "Sparsity", |r| r.sparsity)),
        ];
        for (name, body) in charts {
            let path = out_dir.join(name);
            write_file(&path, body.as_bytes())?;
            manifest.push(path);
        }
    }
    Ok(manifest)
}

//! CSV and JSON comparison reports.
//!
//! Both formats carry the same fields in the order of [`COLUMNS`]. Floats
//! are rounded to six significant digits; CSV writes them as `{:.5e}`, JSON
//! as numbers. Missing values (the `save_*` columns of LM rows, the coarse
//! width of LM rows) are empty in CSV and `null` in JSON. `rmse_per_seed`
//! is a `;`-separated list in CSV and an array in JSON.

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use crate::runner::ComparisonRow;

pub const COLUMNS: [&str; 16] = [
    "campaign",
    "problem",
    "nu",
    "hidden",
    "activation",
    "solver",
    "seeds",
    "converged",
    "failed",
    "mean_iterations",
    "mean_coarse_hidden",
    "rmse_geomean",
    "rmse_per_seed",
    "save_min",
    "save_mean",
    "save_max",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => anyhow::bail!("unknown format '{s}', expected csv or json"),
        }
    }
}

/// `x` with six significant digits, as text.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.5e}")
}

fn round6(x: f64) -> f64 {
    if x.is_finite() {
        fmt_float(x).parse().expect("formatted float parses")
    } else {
        x
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn csv_record(row: &ComparisonRow) -> Vec<String> {
    vec![
        row.campaign.clone(),
        row.problem.clone(),
        fmt_float(row.nu),
        row.hidden.to_string(),
        row.activation.clone(),
        row.solver.name().to_string(),
        row.seeds.to_string(),
        row.converged.to_string(),
        row.failed.to_string(),
        fmt_float(row.mean_iterations),
        opt(row.mean_coarse_hidden),
        fmt_float(row.rmse_geomean),
        row.rmse_per_seed.iter().map(|&r| fmt_float(r)).collect::<Vec<_>>().join(";"),
        opt(row.save_min),
        opt(row.save_mean),
        opt(row.save_max),
    ]
}

#[derive(Serialize)]
struct JsonRow<'a> {
    campaign: &'a str,
    problem: &'a str,
    nu: f64,
    hidden: usize,
    activation: &'a str,
    solver: &'static str,
    seeds: usize,
    converged: usize,
    failed: usize,
    mean_iterations: Option<f64>,
    mean_coarse_hidden: Option<f64>,
    rmse_geomean: Option<f64>,
    rmse_per_seed: Vec<f64>,
    save_min: Option<f64>,
    save_mean: Option<f64>,
    save_max: Option<f64>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then(|| round6(x))
}

impl<'a> From<&'a ComparisonRow> for JsonRow<'a> {
    fn from(row: &'a ComparisonRow) -> Self {
        JsonRow {
            campaign: &row.campaign,
            problem: &row.problem,
            nu: round6(row.nu),
            hidden: row.hidden,
            activation: &row.activation,
            solver: row.solver.name(),
            seeds: row.seeds,
            converged: row.converged,
            failed: row.failed,
            mean_iterations: finite(row.mean_iterations),
            mean_coarse_hidden: row.mean_coarse_hidden.and_then(finite),
            rmse_geomean: finite(row.rmse_geomean),
            rmse_per_seed: row.rmse_per_seed.iter().map(|&r| round6(r)).collect(),
            save_min: row.save_min.and_then(finite),
            save_mean: row.save_mean.and_then(finite),
            save_max: row.save_max.and_then(finite),
        }
    }
}

/// Renders `rows` in `format`.
pub fn render_report(rows: &[ComparisonRow], format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(COLUMNS)?;
            for row in rows {
                w.write_record(csv_record(row))?;
            }
            Ok(w.into_inner().context("flushing CSV")?)
        }
        Format::Json => {
            let json: Vec<JsonRow> = rows.iter().map(JsonRow::from).collect();
            let mut out = serde_json::to_vec_pretty(&json)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}

/// Writes the report to `path`.
pub fn emit_report(rows: &[ComparisonRow], format: Format, path: &Path) -> Result<()> {
    let bytes = render_report(rows, format)?;
    let mut file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    file.write_all(&bytes).with_context(|| format!("writing {}", path.display()))
}

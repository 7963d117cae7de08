//! CSV and manifest output.
//!
//! Reward means are written twice: rounded to one decimal, and in full
//! shortest-round-trip precision in a `_raw` column.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, MetricsSummary, SweepResult, VerificationReport};
use crate::reporting::config::{to_raw, RawConfig};
use crate::reporting::hist::csv_io;
use crate::simulators::{FeedbackMode, SimulatorKind};

pub const PER_TIMESTEP_FILE: &str = "per_timestep.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.toml";

/// Everything needed to reproduce a run's output files.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub master_seed: u64,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
    pub files: Vec<String>,
    pub summaries: Vec<ManifestSummary>,
    /// Caveats about how the results relate to the reference tables.
    pub notes: Vec<String>,
    pub(crate) config: RawConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestSummary {
    pub strategy: String,
    pub runs: u64,
    pub overall: f64,
    pub last7: f64,
}

impl RunManifest {
    pub fn new(config: &ExperimentConfig, summaries: &[MetricsSummary], timestamp: u64) -> Self {
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed: config.master_seed,
            timestamp,
            files: vec![PER_TIMESTEP_FILE.into(), SUMMARY_FILE.into()],
            summaries: summaries
                .iter()
                .map(|s| ManifestSummary {
                    strategy: s.label.clone(),
                    runs: s.runs,
                    overall: s.overall_mean,
                    last7: s.last7_mean,
                })
                .collect(),
            notes: notes(config),
            config: to_raw(config),
        }
    }
}

fn notes(config: &ExperimentConfig) -> Vec<String> {
    let env = &config.environment;
    let mut out = Vec::new();
    if env.kind == SimulatorKind::Pattern {
        out.push(match env.feedback {
            FeedbackMode::Baseline => "pattern lags use baseline steps; feedback = \"adjusted\" feeds rewards back \
                 instead, which drifts far above the reference pattern-simulator means"
                .to_string(),
            FeedbackMode::Adjusted => "pattern lags use adjusted rewards; expect means well above the \
                 reference pattern-simulator table"
                .to_string(),
        });
    }
    out
}

#[derive(Serialize)]
struct TimestepRow<'a> {
    strategy: &'a str,
    t: usize,
    mean_reward: String,
    mean_reward_raw: f64,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    strategy: &'a str,
    overall: String,
    last7: String,
    overall_raw: f64,
    last7_raw: f64,
    runs: u64,
}

fn one_decimal(x: f64) -> String {
    format!("{x:.1}")
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_rows<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, csv_io(e)))?;
    for row in rows {
        w.serialize(row).map_err(|e| Error::io(path, csv_io(e)))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Write the per-timestep CSV, the summary CSV and the manifest into `out_dir`.
pub fn emit_results(
    summaries: &[MetricsSummary],
    config: &ExperimentConfig,
    out_dir: &Path,
    timestamp: u64,
) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let per_t = out_dir.join(PER_TIMESTEP_FILE);
    write_rows(
        &per_t,
        summaries.iter().flat_map(|s| {
            s.per_t_mean.iter().enumerate().map(|(i, &m)| TimestepRow {
                strategy: &s.label,
                t: i + 1,
                mean_reward: one_decimal(m),
                mean_reward_raw: m,
            })
        }),
    )?;
    let summary = out_dir.join(SUMMARY_FILE);
    write_rows(
        &summary,
        summaries.iter().map(|s| SummaryRow {
            strategy: &s.label,
            overall: one_decimal(s.overall_mean),
            last7: one_decimal(s.last7_mean),
            overall_raw: s.overall_mean,
            last7_raw: s.last7_mean,
            runs: s.runs,
        }),
    )?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let manifest = RunManifest::new(config, summaries, timestamp);
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(vec![per_t, summary, manifest_path])
}

#[derive(Serialize)]
struct SweepRow {
    value: f64,
    overall: String,
    last7: String,
    overall_raw: f64,
    last7_raw: f64,
}

/// `value,overall,last7,...` rows for a parameter sweep.
pub fn emit_sweep(result: &SweepResult, out_path: &Path) -> Result<()> {
    if let Some(parent) = out_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_rows(
        out_path,
        result.points.iter().map(|p| SweepRow {
            value: p.value,
            overall: one_decimal(p.overall_mean),
            last7: one_decimal(p.last7_mean),
            overall_raw: p.overall_mean,
            last7_raw: p.last7_mean,
        }),
    )
}

#[derive(Serialize)]
struct CoefficientRow<'a> {
    feature: &'a str,
    full_coefficient: f64,
    full_p_value: f64,
    kept: bool,
    coefficient: Option<f64>,
    std_error: Option<f64>,
    p_value: Option<f64>,
}

/// Coefficient table and histogram of a simulator verification run.
pub fn emit_verification(report: &VerificationReport, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(out_dir)?;
    let coef_path = out_dir.join("verify_coefficients.csv");
    let full_p = report.full_fit.p_values();
    let reduced_p = report.reduced_fit.p_values();
    write_rows(
        &coef_path,
        report.full_fit.feature_names.iter().enumerate().map(|(j, name)| {
            let kept = report.reduced_fit.feature_names.iter().position(|n| n == name);
            CoefficientRow {
                feature: name,
                full_coefficient: report.full_fit.coefficients[j],
                full_p_value: full_p[j],
                kept: kept.is_some(),
                coefficient: kept.map(|i| report.reduced_fit.coefficients[i]),
                std_error: kept.map(|i| report.reduced_fit.std_errors[i]),
                p_value: kept.map(|i| reduced_p[i]),
            }
        }),
    )?;
    let hist_path = out_dir.join("verify_histogram.csv");
    report.histogram.write_csv(&hist_path)?;
    Ok(vec![coef_path, hist_path])
}

//! Config-driven pipeline: baseline detection, model fitting and residual
//! monitoring, each stage reading the previous stage's files from the
//! output directory.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::Serialize;

use windspc_core::baseline::BaselineWindow;
use windspc_core::chart::format_percent;
use windspc_core::ingest::{Dataset, IngestReport, Provenance};
use windspc_core::regress::RegressionModel;

pub use config::PipelineConfig;
pub use error::CliError;

use output::{BaselineDoc, FixedSummary, Summary, VariableSummary};

/// Simulate the configured scenario; writes `dataset.csv` and `ground_truth.json`.
pub fn cmd_simulate(cfg: &PipelineConfig) -> Result<Dataset, CliError> {
    let d = pipeline::simulate(cfg)?;
    output::write_dataset(&cfg.output_dir, &d, &cfg.schema)?;
    if let Provenance::Simulated(gt) = d.provenance() {
        output::write_json(&cfg.output_dir, output::GROUND_TRUTH_FILE, gt)?;
    }
    Ok(d)
}

#[derive(Debug, Serialize)]
pub struct IngestSummary {
    pub source: String,
    pub records: usize,
    pub running_records: usize,
    pub cadence_secs: f64,
    pub first: Option<DateTime<Utc>>,
    pub last: Option<DateTime<Utc>>,
    pub parse: Option<IngestReport>,
}

/// Load and filter the input; writes `ingest.json`.
pub fn cmd_ingest(cfg: &PipelineConfig) -> Result<IngestSummary, CliError> {
    let l = pipeline::load(cfg)?;
    let s = IngestSummary {
        source: l.raw.provenance().to_string(),
        records: l.raw.len(),
        running_records: l.data.len(),
        cadence_secs: l.raw.cadence_secs(),
        first: l.raw.first_timestamp(),
        last: l.raw.last_timestamp(),
        parse: l.report,
    };
    output::write_json(&cfg.output_dir, output::INGEST_FILE, &s)?;
    Ok(s)
}

fn baseline_stage(cfg: &PipelineConfig, data: &Dataset) -> Result<BaselineWindow, CliError> {
    let w = pipeline::baseline(cfg, data)?;
    let doc = BaselineDoc::new(
        &w,
        cfg.baseline.pair.clone(),
        cfg.baseline.min_points,
        pipeline::upper_bound(cfg)?,
    );
    output::write_baseline(&cfg.output_dir, &doc, &w)?;
    Ok(w)
}

/// Detect the in-control window; writes `baseline.json` and `rho_profile.csv`.
pub fn cmd_baseline(cfg: &PipelineConfig) -> Result<BaselineWindow, CliError> {
    let l = pipeline::load(cfg)?;
    baseline_stage(cfg, &l.data)
}

fn baseline_end(cfg: &PipelineConfig) -> Result<DateTime<Utc>, CliError> {
    match cfg.baseline.end_override {
        Some(t) => Ok(t),
        None => Ok(output::read_baseline(&cfg.output_dir)?.end),
    }
}

fn fit_stage(
    cfg: &PipelineConfig,
    data: &Dataset,
    end: DateTime<Utc>,
) -> Result<Vec<RegressionModel>, CliError> {
    let fitted = pipeline::fit(cfg, data, end)?;
    for f in &fitted {
        output::write_model(&cfg.output_dir, &f.model, f.selection.as_deref())?;
    }
    Ok(fitted.into_iter().map(|f| f.model).collect())
}

/// Fit one model per configured response on the baseline window; writes
/// `model_<variable>.json`.
pub fn cmd_fit(cfg: &PipelineConfig) -> Result<Vec<RegressionModel>, CliError> {
    let end = baseline_end(cfg)?;
    let l = pipeline::load(cfg)?;
    fit_stage(cfg, &l.data, end)
}

fn monitor_stage(
    cfg: &PipelineConfig,
    data: &Dataset,
    models: &[RegressionModel],
    end: DateTime<Utc>,
) -> Result<Summary, CliError> {
    let mon = pipeline::monitor_data(cfg, data)?;
    let monitored = pipeline::monitor_models(cfg, &mon, models, end)?;
    for v in &monitored {
        output::write_alarms(&cfg.output_dir, v)?;
    }
    let fixed = pipeline::fixed_comparisons(cfg, &mon)
        .into_iter()
        .map(|(field, r)| {
            let total = r.points.len();
            FixedSummary {
                field,
                thresholds: r.thresholds,
                total,
                warning_count: r.warning_count,
                alarm_count: r.alarm_count,
                percent_warning: format_percent(r.warning_count, total, cfg.locale),
                percent_alarm: format_percent(r.alarm_count, total, cfg.locale),
            }
        })
        .collect();
    let summary = Summary {
        baseline_end: end,
        variables: monitored
            .iter()
            .map(|v| VariableSummary::new(v, end, cfg.locale))
            .collect(),
        fixed_thresholds: fixed,
    };
    output::write_json(&cfg.output_dir, output::SUMMARY_FILE, &summary)?;
    Ok(summary)
}

/// Chart residuals of the fitted models; writes `alarms_<variable>.csv` and
/// `summary.json`.
pub fn cmd_monitor(cfg: &PipelineConfig) -> Result<Summary, CliError> {
    let end = baseline_end(cfg)?;
    let models = cfg
        .models
        .iter()
        .map(|m| output::read_model(&cfg.output_dir, &m.response))
        .collect::<Result<Vec<_>, _>>()?;
    let l = pipeline::load(cfg)?;
    monitor_stage(cfg, &l.data, &models, end)
}

/// Render `summary.json` as text; writes `report.txt`.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<String, CliError> {
    let summary = output::read_summary(&cfg.output_dir)?;
    let events = match &cfg.baseline.events_csv {
        Some(p) => pipeline::read_events(p)?,
        None => Vec::new(),
    };
    let text = output::render_report(&summary, &events);
    output::write_text(&cfg.output_dir, output::REPORT_FILE, &text)?;
    Ok(text)
}

/// Baseline, fit, monitor and report in one pass over a single load.
pub fn cmd_run(cfg: &PipelineConfig) -> Result<String, CliError> {
    let l = pipeline::load(cfg)?;
    let end = match cfg.baseline.end_override {
        Some(t) => t,
        None => baseline_stage(cfg, &l.data)?.end,
    };
    let models = fit_stage(cfg, &l.data, end)?;
    monitor_stage(cfg, &l.data, &models, end)?;
    cmd_report(cfg)
}

pub fn output_files(cfg: &PipelineConfig) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&cfg.output_dir)
        .map(|it| it.filter_map(|e| e.ok()).map(|e| e.path()).collect())
        .unwrap_or_default();
    files.sort();
    files
}

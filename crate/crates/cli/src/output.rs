//! Files written to and read back from the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use windspc_core::baseline::BaselineWindow;
use windspc_core::chart::{format_percent, ControlChart, DecimalMark, FixedThresholds};
use windspc_core::ingest::{format_timestamp, write_dataset_csv, Dataset, Schema};
use windspc_core::regress::{RegressionModel, SubsetCandidate};
use windspc_core::Field;

use crate::error::CliError;
use crate::pipeline::VariableMonitor;

pub const BASELINE_FILE: &str = "baseline.json";
pub const PROFILE_FILE: &str = "rho_profile.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const REPORT_FILE: &str = "report.txt";
pub const DATASET_FILE: &str = "dataset.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const INGEST_FILE: &str = "ingest.json";

pub fn model_file(response: &Field) -> String {
    format!("model_{}.json", response.file_stem())
}

pub fn selection_file(response: &Field) -> String {
    format!("selection_{}.json", response.file_stem())
}

pub fn alarms_file(response: &Field) -> String {
    format!("alarms_{}.csv", response.file_stem())
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("cannot write {}: {e}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| write_err(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    write_text(dir, name, &text)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub fn write_dataset(dir: &Path, d: &Dataset, schema: &Schema) -> Result<PathBuf, CliError> {
    ensure_dir(dir)?;
    let path = dir.join(DATASET_FILE);
    let file = fs::File::create(&path).map_err(|e| write_err(&path, e))?;
    write_dataset_csv(d, schema, std::io::BufWriter::new(file))?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDoc {
    pub pair: (Field, Field),
    pub min_points: usize,
    pub upper_bound: Option<DateTime<Utc>>,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub rho_max: f64,
    pub profile_points: usize,
}

impl BaselineDoc {
    pub fn new(
        w: &BaselineWindow,
        pair: (Field, Field),
        min_points: usize,
        ub: Option<DateTime<Utc>>,
    ) -> Self {
        Self {
            pair,
            min_points,
            upper_bound: ub,
            start: w.start,
            end: w.end,
            rho_max: w.rho_max,
            profile_points: w.profile.len(),
        }
    }
}

pub fn write_baseline(dir: &Path, doc: &BaselineDoc, w: &BaselineWindow) -> Result<(), CliError> {
    write_json(dir, BASELINE_FILE, doc)?;
    let mut csv = String::from("timestamp,rho\n");
    for p in &w.profile {
        csv.push_str(&format!("{},{}\n", format_timestamp(&p.timestamp), p.rho));
    }
    write_text(dir, PROFILE_FILE, &csv)?;
    Ok(())
}

pub fn read_baseline(dir: &Path) -> Result<BaselineDoc, CliError> {
    let path = dir.join(BASELINE_FILE);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} not found; run `baseline` first or set baseline.end_override",
            path.display()
        )));
    }
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SelectionRow {
    terms: Vec<String>,
    cp: f64,
    sse: f64,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    selected: bool,
}

pub fn write_model(
    dir: &Path,
    m: &RegressionModel,
    selection: Option<&[SubsetCandidate]>,
) -> Result<(), CliError> {
    let mut text = m.to_json();
    text.push('\n');
    write_text(dir, &model_file(&m.response), &text)?;
    if let Some(cands) = selection {
        let rows: Vec<SelectionRow> = cands
            .iter()
            .map(|c| SelectionRow {
                terms: c.terms.iter().map(|t| t.to_string()).collect(),
                cp: c.cp,
                sse: c.sse,
                selected: c.terms == m.terms,
            })
            .collect();
        write_json(dir, &selection_file(&m.response), &rows)?;
    }
    Ok(())
}

pub fn read_model(dir: &Path, response: &Field) -> Result<RegressionModel, CliError> {
    let path = dir.join(model_file(response));
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} not found; run `fit` first",
            path.display()
        )));
    }
    Ok(RegressionModel::from_json(&read_text(&path)?)?)
}

pub fn write_alarms(dir: &Path, v: &VariableMonitor) -> Result<(), CliError> {
    let mut csv = String::from("timestamp,residual,lcl,ucl,status\n");
    for p in &v.report.points {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            format_timestamp(&p.timestamp),
            p.residual,
            v.chart.lcl,
            v.chart.ucl,
            p.status.as_str()
        ));
    }
    write_text(dir, &alarms_file(&v.response), &csv)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmWindow {
    pub start: DateTime<Utc>,
    pub alarms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub response: Field,
    pub chart: ControlChart,
    pub out_count: usize,
    pub total: usize,
    pub fraction_out: f64,
    pub percent_out: String,
    pub baseline_out: usize,
    pub baseline_total: usize,
    pub baseline_fraction_out: f64,
    pub skipped_records: usize,
    pub first_alarm_after_baseline: Option<DateTime<Utc>>,
    pub alarm_windows: Vec<AlarmWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedSummary {
    pub field: Field,
    pub thresholds: FixedThresholds,
    pub total: usize,
    pub warning_count: usize,
    pub alarm_count: usize,
    pub percent_warning: String,
    pub percent_alarm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub baseline_end: DateTime<Utc>,
    pub variables: Vec<VariableSummary>,
    pub fixed_thresholds: Vec<FixedSummary>,
}

impl VariableSummary {
    pub fn new(v: &VariableMonitor, baseline_end: DateTime<Utc>, mark: DecimalMark) -> Self {
        let r = &v.report;
        let first_alarm_after_baseline = r
            .points
            .iter()
            .find(|p| p.timestamp > baseline_end && p.status.is_out())
            .map(|p| p.timestamp);
        Self {
            response: v.response.clone(),
            chart: v.chart,
            out_count: r.out_count,
            total: r.total,
            fraction_out: r.fraction_out,
            percent_out: format_percent(r.out_count, r.total, mark),
            baseline_out: r.baseline_out,
            baseline_total: r.baseline_total,
            baseline_fraction_out: r.baseline_fraction_out,
            skipped_records: v.skipped,
            first_alarm_after_baseline,
            alarm_windows: v
                .windows
                .iter()
                .map(|w| AlarmWindow {
                    start: w.start,
                    alarms: w.alarms,
                })
                .collect(),
        }
    }
}

pub fn read_summary(dir: &Path) -> Result<Summary, CliError> {
    let path = dir.join(SUMMARY_FILE);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} not found; run `monitor` first",
            path.display()
        )));
    }
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Plain-text rendering of a summary.
pub fn render_report(s: &Summary, events: &[(DateTime<Utc>, String)]) -> String {
    let mut out = format!("baseline end: {}\n\n", format_timestamp(&s.baseline_end));
    out.push_str(&format!(
        "{:<36} {:>14} {:>9} {:>12} {:>12}\n",
        "variable", "out/total", "out", "lcl", "ucl"
    ));
    for v in &s.variables {
        out.push_str(&format!(
            "{:<36} {:>14} {:>9} {:>12.6} {:>12.6}\n",
            v.response.to_string(),
            format!("{}/{}", v.out_count, v.total),
            v.percent_out,
            v.chart.lcl,
            v.chart.ucl
        ));
    }
    if !s.fixed_thresholds.is_empty() {
        out.push_str("\nfixed thresholds\n");
        for f in &s.fixed_thresholds {
            out.push_str(&format!(
                "{:<36} warning > {}: {} ({}), alarm > {}: {} ({})\n",
                f.field.to_string(),
                f.thresholds.warning,
                f.warning_count,
                f.percent_warning,
                f.thresholds.alarm,
                f.alarm_count,
                f.percent_alarm
            ));
        }
    }
    if !events.is_empty() {
        out.push_str("\nevents\n");
        for (t, label) in events {
            out.push_str(&format!("{} {}\n", format_timestamp(t), label));
        }
    }
    out
}

//! In-memory pipeline stages. Nothing here touches the output directory.

use std::fs::File;
use std::path::Path;

use chrono::{DateTime, TimeDelta, Utc};
use rayon::prelude::*;

use windspc_core::baseline::{detect_baseline, BaselineWindow};
use windspc_core::chart::{
    alarm_counts, compare_fixed, fit_chart, monitor, AlarmReport, ControlChart,
    FixedThresholdReport, WindowCount,
};
use windspc_core::ingest::{
    filter_running, parse_scada_csv, parse_timestamp, subsample, Dataset, IngestOptions,
    IngestReport,
};
use windspc_core::regress::{
    best_subset, ols_fit, residual_series, RegressionModel, SubsetCandidate,
};
use windspc_core::simulate::{generate_scenario, inject_fault};
use windspc_core::Field;

use crate::config::{InputConfig, PipelineConfig};
use crate::error::CliError;

pub struct Loaded {
    /// As read or simulated.
    pub raw: Dataset,
    /// After the operating-state filter.
    pub data: Dataset,
    pub report: Option<IngestReport>,
}

fn secs(s: f64) -> TimeDelta {
    TimeDelta::milliseconds((s * 1000.0).round() as i64)
}

pub fn simulate(cfg: &PipelineConfig) -> Result<Dataset, CliError> {
    let InputConfig::Simulate { scenario, faults } = &cfg.input else {
        return Err(CliError::Config("input is not a simulated scenario".into()));
    };
    let mut d = generate_scenario(scenario)?;
    for f in faults {
        d = inject_fault(&d, f)?;
    }
    Ok(d)
}

pub fn load(cfg: &PipelineConfig) -> Result<Loaded, CliError> {
    let (raw, report) = match &cfg.input {
        InputConfig::Csv { path } => {
            let file = File::open(path)
                .map_err(|e| CliError::Input(format!("cannot open {}: {e}", path.display())))?;
            let opts = IngestOptions {
                reorder_buffer: cfg.ingest.reorder_buffer,
                source_name: path.display().to_string(),
                ..Default::default()
            };
            let ing = parse_scada_csv(file, &cfg.schema, &opts)?;
            (ing.dataset, Some(ing.report))
        }
        InputConfig::Simulate { .. } => (simulate(cfg)?, None),
    };
    if !raw.cadence_consistent(cfg.ingest.cadence_tolerance) {
        log::warn!(
            "median gap {:?}s differs from cadence {}s",
            raw.median_gap_secs(),
            raw.cadence_secs()
        );
    }
    let data = if cfg.ingest.filter_running {
        filter_running(&raw)
    } else {
        raw.clone()
    };
    log::info!("{} records, {} after filtering", raw.len(), data.len());
    Ok(Loaded { raw, data, report })
}

pub fn read_events(path: &Path) -> Result<Vec<(DateTime<Utc>, String)>, CliError> {
    let input = |e: String| CliError::Input(format!("{}: {e}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| input(e.to_string()))?;
    let mut events = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| input(e.to_string()))?;
        let ts = row
            .get(0)
            .and_then(parse_timestamp)
            .ok_or_else(|| input(format!("bad event timestamp {:?}", row.get(0))))?;
        events.push((ts, row.get(1).unwrap_or("").to_string()));
    }
    events.sort_by_key(|e| e.0);
    Ok(events)
}

/// Configured upper bound, else the first logged event.
pub fn upper_bound(cfg: &PipelineConfig) -> Result<Option<DateTime<Utc>>, CliError> {
    if let Some(ub) = cfg.baseline.upper_bound {
        return Ok(Some(ub));
    }
    match &cfg.baseline.events_csv {
        Some(p) => Ok(read_events(p)?.first().map(|e| e.0)),
        None => Ok(None),
    }
}

pub fn baseline(cfg: &PipelineConfig, data: &Dataset) -> Result<BaselineWindow, CliError> {
    let profile_data = match cfg.baseline.subsample_secs {
        Some(s) => subsample(data, secs(s))?,
        None => data.clone(),
    };
    let (a, b) = &cfg.baseline.pair;
    let w = detect_baseline(
        &profile_data,
        a,
        b,
        cfg.baseline.min_points,
        upper_bound(cfg)?,
    )?;
    Ok(w)
}

pub struct FittedModel {
    pub model: RegressionModel,
    /// All scored subsets when selection was requested.
    pub selection: Option<Vec<SubsetCandidate>>,
}

pub fn fit(
    cfg: &PipelineConfig,
    data: &Dataset,
    baseline_end: DateTime<Utc>,
) -> Result<Vec<FittedModel>, CliError> {
    let fit_data = subsample(&data.until(baseline_end), secs(cfg.chart.fit_interval_secs))?;
    log::info!("fitting on {} baseline records", fit_data.len());
    cfg.models
        .par_iter()
        .map(|spec| {
            let ctx = |e| CliError::from(e).context(&spec.response);
            let fitted = if spec.select {
                let sel = best_subset(&fit_data, &spec.response, &spec.terms).map_err(ctx)?;
                FittedModel {
                    model: sel.model,
                    selection: Some(sel.candidates),
                }
            } else {
                FittedModel {
                    model: ols_fit(&fit_data, &spec.response, &spec.terms).map_err(ctx)?,
                    selection: None,
                }
            };
            Ok(fitted)
        })
        .collect()
}

pub struct VariableMonitor {
    pub response: Field,
    pub chart: ControlChart,
    pub report: AlarmReport,
    pub skipped: usize,
    pub windows: Vec<WindowCount>,
}

pub fn monitor_data(cfg: &PipelineConfig, data: &Dataset) -> Result<Dataset, CliError> {
    Ok(match cfg.chart.monitor_interval_secs {
        Some(s) => subsample(data, secs(s))?,
        None => data.clone(),
    })
}

/// Chart limits come from the residuals of monitoring-cadence records inside
/// the baseline window.
pub fn monitor_models(
    cfg: &PipelineConfig,
    mon: &Dataset,
    models: &[RegressionModel],
    baseline_end: DateTime<Utc>,
) -> Result<Vec<VariableMonitor>, CliError> {
    models
        .par_iter()
        .map(|m| {
            let res = residual_series(m, mon);
            let chart = fit_chart(&res.until(baseline_end), cfg.chart.min_baseline)
                .map_err(|e| CliError::from(e).context(&m.response))?;
            let report = monitor(&chart, &res.points, Some(baseline_end));
            let windows = alarm_counts(&report, secs(cfg.chart.cluster_window_secs));
            Ok(VariableMonitor {
                response: m.response.clone(),
                chart,
                report,
                skipped: res.skipped,
                windows,
            })
        })
        .collect()
}

pub fn fixed_comparisons(
    cfg: &PipelineConfig,
    mon: &Dataset,
) -> Vec<(Field, FixedThresholdReport)> {
    cfg.thresholds
        .iter()
        .map(|(f, t)| {
            let values: Vec<_> = mon
                .records()
                .iter()
                .filter_map(|r| Some((r.timestamp, r.get(f)?)))
                .collect();
            (f.clone(), compare_fixed(&values, t))
        })
        .collect()
}

//! Shewhart individuals chart on regression residuals.

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

/// `d2` for subgroups of size two: converts the mean moving range into a
/// standard deviation estimate.
pub const D2: f64 = 1.128;

/// Width of the control band in sigmas.
pub const LIMIT_SIGMAS: f64 = 3.0;

pub const DEFAULT_MIN_BASELINE: usize = 30;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ChartError {
    #[error("series of length {len} is too short, need {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("all moving ranges are zero; sigma cannot be estimated")]
    ZeroRange,
    #[error("baseline has {len} residuals, need at least {needed}")]
    InsufficientBaseline { len: usize, needed: usize },
    #[error("invalid fixed thresholds: need 0 < warning < alarm")]
    InvalidThresholds,
}

/// `mean(|x[i+1] - x[i]|) / d2`.
pub fn moving_range_sigma(x: &[f64]) -> Result<f64, ChartError> {
    if x.len() < 2 {
        return Err(ChartError::SeriesTooShort {
            len: x.len(),
            needed: 2,
        });
    }
    let total: f64 = x.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
    let mr_bar = total / (x.len() - 1) as f64;
    if mr_bar == 0.0 {
        return Err(ChartError::ZeroRange);
    }
    Ok(mr_bar / D2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlChart {
    pub center: f64,
    pub sigma_hat: f64,
    pub lcl: f64,
    pub ucl: f64,
    pub n_baseline: usize,
}

impl ControlChart {
    pub fn status(&self, value: f64) -> PointStatus {
        if value > self.ucl {
            PointStatus::OutHigh
        } else if value < self.lcl {
            PointStatus::OutLow
        } else {
            PointStatus::InControl
        }
    }

    /// The same chart moved by `c`.
    pub fn shifted(&self, c: f64) -> ControlChart {
        ControlChart {
            center: self.center + c,
            lcl: self.lcl + c,
            ucl: self.ucl + c,
            ..*self
        }
    }
}

/// Estimate center line and limits from in-control residuals.
pub fn fit_chart(baseline: &[f64], min_baseline: usize) -> Result<ControlChart, ChartError> {
    if baseline.len() < min_baseline.max(2) {
        return Err(ChartError::InsufficientBaseline {
            len: baseline.len(),
            needed: min_baseline.max(2),
        });
    }
    let center = baseline.iter().sum::<f64>() / baseline.len() as f64;
    let sigma_hat = moving_range_sigma(baseline)?;
    Ok(ControlChart {
        center,
        sigma_hat,
        lcl: center - LIMIT_SIGMAS * sigma_hat,
        ucl: center + LIMIT_SIGMAS * sigma_hat,
        n_baseline: baseline.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PointStatus {
    InControl,
    OutHigh,
    OutLow,
}

impl PointStatus {
    pub fn is_out(self) -> bool {
        self != PointStatus::InControl
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::InControl => "in_control",
            PointStatus::OutHigh => "out_high",
            PointStatus::OutLow => "out_low",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlarmPoint {
    pub timestamp: DateTime<Utc>,
    pub residual: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlarmReport {
    pub points: Vec<AlarmPoint>,
    pub out_count: usize,
    pub total: usize,
    pub fraction_out: f64,
    pub baseline_out: usize,
    pub baseline_total: usize,
    pub baseline_fraction_out: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl AlarmReport {
    pub fn from_points(points: Vec<AlarmPoint>, baseline_end: Option<DateTime<Utc>>) -> Self {
        let out_count = points.iter().filter(|p| p.status.is_out()).count();
        let in_baseline = |p: &&AlarmPoint| baseline_end.is_some_and(|end| p.timestamp <= end);
        let baseline_total = points.iter().filter(in_baseline).count();
        let baseline_out = points
            .iter()
            .filter(in_baseline)
            .filter(|p| p.status.is_out())
            .count();
        let total = points.len();
        Self {
            points,
            out_count,
            total,
            fraction_out: ratio(out_count, total),
            baseline_out,
            baseline_total,
            baseline_fraction_out: ratio(baseline_out, baseline_total),
        }
    }

    /// Index of the first out-of-control point at or after `t`.
    pub fn first_alarm_after(&self, t: DateTime<Utc>) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.timestamp >= t && p.status.is_out())
    }
}

/// Label each residual against the chart. Points on a limit are in control.
pub fn monitor(
    chart: &ControlChart,
    residuals: &[(DateTime<Utc>, f64)],
    baseline_end: Option<DateTime<Utc>>,
) -> AlarmReport {
    let points = residuals
        .iter()
        .map(|&(timestamp, residual)| AlarmPoint {
            timestamp,
            residual,
            status: chart.status(residual),
        })
        .collect();
    AlarmReport::from_points(points, baseline_end)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowCount {
    pub start: DateTime<Utc>,
    pub alarms: usize,
}

/// Alarm counts per consecutive window of the given width, starting at the
/// first point. Only windows with at least one alarm are listed.
pub fn alarm_counts(report: &AlarmReport, window: TimeDelta) -> Vec<WindowCount> {
    let Some(first) = report.points.first() else {
        return Vec::new();
    };
    let width = window.num_milliseconds().max(1);
    let mut out: Vec<WindowCount> = Vec::new();
    for p in report.points.iter().filter(|p| p.status.is_out()) {
        let k = (p.timestamp - first.timestamp).num_milliseconds() / width;
        let start = first.timestamp + TimeDelta::milliseconds(k * width);
        match out.last_mut() {
            Some(w) if w.start == start => w.alarms += 1,
            _ => out.push(WindowCount { start, alarms: 1 }),
        }
    }
    out
}

/// Vendor alarm levels on a raw (unadjusted) reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedThresholds {
    pub warning: f64,
    pub alarm: f64,
}

impl FixedThresholds {
    pub fn new(warning: f64, alarm: f64) -> Result<Self, ChartError> {
        let t = Self { warning, alarm };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), ChartError> {
        if 0.0 < self.warning && self.warning < self.alarm {
            Ok(())
        } else {
            Err(ChartError::InvalidThresholds)
        }
    }

    pub fn level(&self, value: f64) -> ThresholdLevel {
        if value > self.alarm {
            ThresholdLevel::Alarm
        } else if value > self.warning {
            ThresholdLevel::Warning
        } else {
            ThresholdLevel::Normal
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdLevel {
    Normal,
    Warning,
    Alarm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedThresholdReport {
    pub thresholds: FixedThresholds,
    pub points: Vec<(DateTime<Utc>, f64, ThresholdLevel)>,
    pub warning_count: usize,
    pub alarm_count: usize,
}

pub fn compare_fixed(
    values: &[(DateTime<Utc>, f64)],
    thresholds: &FixedThresholds,
) -> FixedThresholdReport {
    let points: Vec<_> = values
        .iter()
        .map(|&(t, v)| (t, v, thresholds.level(v)))
        .collect();
    let count = |lvl| points.iter().filter(|p| p.2 == lvl).count();
    FixedThresholdReport {
        thresholds: *thresholds,
        warning_count: count(ThresholdLevel::Warning),
        alarm_count: count(ThresholdLevel::Alarm),
        points,
    }
}

/// Decimal separator used when rendering percentages.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecimalMark {
    #[default]
    Dot,
    Comma,
}

/// `count / total` as a percentage with two decimals, e.g. `7.01%`.
pub fn format_percent(count: usize, total: usize, mark: DecimalMark) -> String {
    let s = format!("{:.2}%", 100.0 * ratio(count, total));
    match mark {
        DecimalMark::Dot => s,
        DecimalMark::Comma => s.replace('.', ","),
    }
}

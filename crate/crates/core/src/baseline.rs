//! In-control (phase I) period detection.
//!
//! The running Pearson correlation between a reference pair of variables is
//! tracked from the first record onwards. The baseline ends where that
//! correlation peaks.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::ingest::Dataset;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("min_points must be at least 3, got {0}")]
    InvalidMinPoints(usize),
    #[error("no correlation profile point available before the upper bound")]
    NoValidWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub timestamp: DateTime<Utc>,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub rho_max: f64,
    #[serde(skip)]
    pub profile: Vec<ProfilePoint>,
}

/// Running co-moments of a pair, updated one observation at a time.
#[derive(Debug, Default, Clone, Copy)]
struct RunningPair {
    n: usize,
    mean_a: f64,
    mean_b: f64,
    m2_a: f64,
    m2_b: f64,
    co: f64,
}

impl RunningPair {
    fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        let n = self.n as f64;
        let da = a - self.mean_a;
        let db = b - self.mean_b;
        self.mean_a += da / n;
        self.mean_b += db / n;
        let da2 = a - self.mean_a;
        let db2 = b - self.mean_b;
        self.m2_a += da * da2;
        self.m2_b += db * db2;
        self.co += da * db2;
    }

    fn correlation(&self) -> Option<f64> {
        if self.m2_a <= 0.0 || self.m2_b <= 0.0 {
            return None;
        }
        Some((self.co / (self.m2_a * self.m2_b).sqrt()).clamp(-1.0, 1.0))
    }
}

/// `rho(t)` over `[T0, t]` for every record time `t`, emitted once at least
/// `min_points` complete pairs have been seen. Points where either variable
/// has zero variance so far are left out.
pub fn correlation_profile(
    d: &Dataset,
    var_a: &Field,
    var_b: &Field,
    min_points: usize,
) -> Result<Vec<ProfilePoint>, BaselineError> {
    if min_points < 3 {
        return Err(BaselineError::InvalidMinPoints(min_points));
    }
    let mut acc = RunningPair::default();
    let mut out = Vec::new();
    for rec in d.records() {
        if let (Some(a), Some(b)) = (rec.get(var_a), rec.get(var_b)) {
            acc.push(a, b);
        }
        if acc.n < min_points {
            continue;
        }
        if let Some(rho) = acc.correlation() {
            out.push(ProfilePoint {
                timestamp: rec.timestamp,
                rho,
            });
        }
    }
    Ok(out)
}

/// Window `[T0, t*]` with `t*` the latest time at which the profile attains
/// its maximum, looking only at profile points up to `upper_bound`.
pub fn detect_baseline(
    d: &Dataset,
    var_a: &Field,
    var_b: &Field,
    min_points: usize,
    upper_bound: Option<DateTime<Utc>>,
) -> Result<BaselineWindow, BaselineError> {
    let mut profile = correlation_profile(d, var_a, var_b, min_points)?;
    if let Some(ub) = upper_bound {
        profile.retain(|p| p.timestamp <= ub);
    }
    let best = profile
        .iter()
        .copied()
        .reduce(|best, p| if p.rho >= best.rho { p } else { best })
        .ok_or(BaselineError::NoValidWindow)?;
    Ok(BaselineWindow {
        start: d.first_timestamp().ok_or(BaselineError::NoValidWindow)?,
        end: best.timestamp,
        rho_max: best.rho,
        profile,
    })
}

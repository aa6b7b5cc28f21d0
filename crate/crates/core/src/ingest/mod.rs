//! SCADA records, datasets and the basic filtering/resampling steps.

mod csv_io;

use std::collections::BTreeMap;

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};

use crate::field::{Field, VibrationMeasure};
use crate::simulate::GroundTruth;

pub use csv_io::{
    format_timestamp, parse_scada_csv, parse_timestamp, write_dataset_csv, IngestOptions,
    IngestReport, Ingested, Schema,
};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("schema column `{0}` is not present in the CSV header")]
    MissingColumn(String),
    #[error("input contains no data rows")]
    EmptyInput,
    #[error("timestamp {timestamp} at data row {row} is out of order beyond the reorder buffer")]
    NonMonotoneTimestamps {
        row: usize,
        timestamp: DateTime<Utc>,
    },
    #[error("records are not strictly increasing in time at index {0}")]
    UnsortedRecords(usize),
    #[error(
        "subsample interval {interval_secs}s is shorter than the dataset cadence {cadence_secs}s"
    )]
    InvalidInterval {
        interval_secs: f64,
        cadence_secs: f64,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Turbine operating state as logged by the controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatingState {
    Emergency = 0,
    Stop = 1,
    Pause = 2,
    Run = 3,
}

impl OperatingState {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            0 => Some(Self::Emergency),
            1 => Some(Self::Stop),
            2 => Some(Self::Pause),
            3 => Some(Self::Run),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct VibrationReading {
    pub velocity: Option<f64>,
    pub acceleration: Option<f64>,
}

/// One timestamped observation. Every numeric value may be missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScadaRecord {
    pub timestamp: DateTime<Utc>,
    pub operating_state: Option<OperatingState>,
    pub wind_speed: Option<f64>,
    pub env_temp: Option<f64>,
    pub nacelle_temp: Option<f64>,
    pub gearbox_temp: Option<f64>,
    pub bearing_temp: Option<f64>,
    pub gen1_temp: Option<f64>,
    pub gen2_temp: Option<f64>,
    pub oil_temp: Option<f64>,
    pub rotor_speed: Option<f64>,
    pub generator_speed: Option<f64>,
    pub power_output: Option<f64>,
    pub pitch_angle: Option<f64>,
    pub yaw: Option<f64>,
    /// Keyed by channel name, e.g. `gen_bearing_de`.
    pub vibration: BTreeMap<String, VibrationReading>,
}

impl ScadaRecord {
    /// A record with every value missing.
    pub fn empty(timestamp: DateTime<Utc>) -> Self {
        Self {
            timestamp,
            operating_state: None,
            wind_speed: None,
            env_temp: None,
            nacelle_temp: None,
            gearbox_temp: None,
            bearing_temp: None,
            gen1_temp: None,
            gen2_temp: None,
            oil_temp: None,
            rotor_speed: None,
            generator_speed: None,
            power_output: None,
            pitch_angle: None,
            yaw: None,
            vibration: BTreeMap::new(),
        }
    }

    pub fn get(&self, field: &Field) -> Option<f64> {
        match field {
            Field::WindSpeed => self.wind_speed,
            Field::EnvTemp => self.env_temp,
            Field::NacelleTemp => self.nacelle_temp,
            Field::GearboxTemp => self.gearbox_temp,
            Field::BearingTemp => self.bearing_temp,
            Field::Gen1Temp => self.gen1_temp,
            Field::Gen2Temp => self.gen2_temp,
            Field::OilTemp => self.oil_temp,
            Field::RotorSpeed => self.rotor_speed,
            Field::GeneratorSpeed => self.generator_speed,
            Field::PowerOutput => self.power_output,
            Field::PitchAngle => self.pitch_angle,
            Field::Yaw => self.yaw,
            Field::Vibration { channel, measure } => {
                let reading = self.vibration.get(channel)?;
                match measure {
                    VibrationMeasure::Velocity => reading.velocity,
                    VibrationMeasure::Acceleration => reading.acceleration,
                }
            }
        }
    }

    pub fn set(&mut self, field: &Field, value: Option<f64>) {
        let slot = match field {
            Field::WindSpeed => &mut self.wind_speed,
            Field::EnvTemp => &mut self.env_temp,
            Field::NacelleTemp => &mut self.nacelle_temp,
            Field::GearboxTemp => &mut self.gearbox_temp,
            Field::BearingTemp => &mut self.bearing_temp,
            Field::Gen1Temp => &mut self.gen1_temp,
            Field::Gen2Temp => &mut self.gen2_temp,
            Field::OilTemp => &mut self.oil_temp,
            Field::RotorSpeed => &mut self.rotor_speed,
            Field::GeneratorSpeed => &mut self.generator_speed,
            Field::PowerOutput => &mut self.power_output,
            Field::PitchAngle => &mut self.pitch_angle,
            Field::Yaw => &mut self.yaw,
            Field::Vibration { channel, measure } => {
                let reading = self.vibration.entry(channel.clone()).or_default();
                match measure {
                    VibrationMeasure::Velocity => &mut reading.velocity,
                    VibrationMeasure::Acceleration => &mut reading.acceleration,
                }
            }
        };
        *slot = value;
    }

    pub fn is_running(&self) -> bool {
        self.operating_state == Some(OperatingState::Run)
    }
}

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Source(String),
    Simulated(Box<GroundTruth>),
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Source(s) => f.write_str(s),
            Provenance::Simulated(gt) => write!(f, "simulated:{}", gt.seed),
        }
    }
}

/// An immutable, time-ordered collection of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<ScadaRecord>,
    cadence_secs: f64,
    provenance: Provenance,
}

impl Dataset {
    /// Fails unless timestamps are strictly increasing.
    pub fn new(
        records: Vec<ScadaRecord>,
        cadence_secs: f64,
        provenance: Provenance,
    ) -> Result<Self, IngestError> {
        if let Some(i) = records
            .windows(2)
            .position(|w| w[1].timestamp <= w[0].timestamp)
        {
            return Err(IngestError::UnsortedRecords(i + 1));
        }
        Ok(Self {
            records,
            cadence_secs,
            provenance,
        })
    }

    // Callers guarantee ordering (subsequences of a valid dataset).
    fn derived(&self, records: Vec<ScadaRecord>, cadence_secs: f64) -> Self {
        Self {
            records,
            cadence_secs,
            provenance: self.provenance.clone(),
        }
    }

    pub fn records(&self) -> &[ScadaRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn cadence_secs(&self) -> f64 {
        self.cadence_secs
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn first_timestamp(&self) -> Option<DateTime<Utc>> {
        self.records.first().map(|r| r.timestamp)
    }

    pub fn last_timestamp(&self) -> Option<DateTime<Utc>> {
        self.records.last().map(|r| r.timestamp)
    }

    pub fn column(&self, field: &Field) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.get(field)).collect()
    }

    /// Median gap between consecutive records in seconds.
    pub fn median_gap_secs(&self) -> Option<f64> {
        median_gap_secs(&self.records)
    }

    /// Whether the declared cadence is within `tolerance` (relative) of the
    /// median gap. Datasets with fewer than two records are always consistent.
    pub fn cadence_consistent(&self, tolerance: f64) -> bool {
        match self.median_gap_secs() {
            Some(gap) => (gap - self.cadence_secs).abs() <= tolerance * self.cadence_secs,
            None => true,
        }
    }

    /// Records with `start <= t <= end`.
    pub fn window(&self, start: DateTime<Utc>, end: DateTime<Utc>) -> Dataset {
        let recs = self
            .records
            .iter()
            .filter(|r| r.timestamp >= start && r.timestamp <= end)
            .cloned()
            .collect();
        self.derived(recs, self.cadence_secs)
    }

    /// Records with `t <= end`.
    pub fn until(&self, end: DateTime<Utc>) -> Dataset {
        let cut = self.records.partition_point(|r| r.timestamp <= end);
        self.derived(self.records[..cut].to_vec(), self.cadence_secs)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Dataset {
        self.provenance = provenance;
        self
    }

    /// Replace record values while keeping timestamps; used by fault injection.
    pub(crate) fn map_records(&self, f: impl FnMut(&ScadaRecord) -> ScadaRecord) -> Dataset {
        let recs = self.records.iter().map(f).collect();
        self.derived(recs, self.cadence_secs)
    }
}

pub(crate) fn median_gap_secs(records: &[ScadaRecord]) -> Option<f64> {
    if records.len() < 2 {
        return None;
    }
    let mut gaps: Vec<f64> = records
        .windows(2)
        .map(|w| (w[1].timestamp - w[0].timestamp).as_seconds_f64())
        .collect();
    gaps.sort_by(|a, b| a.total_cmp(b));
    let m = gaps.len() / 2;
    Some(if gaps.len() % 2 == 1 {
        gaps[m]
    } else {
        0.5 * (gaps[m - 1] + gaps[m])
    })
}

/// Keep only records logged while the turbine was running (state 3).
pub fn filter_running(d: &Dataset) -> Dataset {
    let recs = d
        .records
        .iter()
        .filter(|r| r.is_running())
        .cloned()
        .collect();
    d.derived(recs, d.cadence_secs)
}

/// Take the first record at or after each grid point `t0 + k * interval`.
///
/// A grid point whose window `[g, g + interval)` holds no usable record is
/// skipped. A record is only usable if it also lies at least one interval
/// after the previously selected record, so output timestamps are always
/// at least `interval` apart.
pub fn subsample(d: &Dataset, interval: TimeDelta) -> Result<Dataset, IngestError> {
    let interval_secs = interval.as_seconds_f64();
    if d.is_empty() {
        return Ok(d.derived(Vec::new(), interval_secs));
    }
    if interval <= TimeDelta::zero() || interval_secs < d.cadence_secs {
        return Err(IngestError::InvalidInterval {
            interval_secs,
            cadence_secs: d.cadence_secs,
        });
    }
    let recs = &d.records;
    let t0 = recs[0].timestamp;
    let last = recs[recs.len() - 1].timestamp;
    let mut out = Vec::new();
    let mut prev: Option<DateTime<Utc>> = None;
    let mut k: i32 = 0;
    loop {
        let grid = t0 + interval * k;
        if grid > last {
            break;
        }
        let earliest = match prev {
            Some(p) => grid.max(p + interval),
            None => grid,
        };
        let idx = recs.partition_point(|r| r.timestamp < earliest);
        match recs.get(idx) {
            Some(r) if r.timestamp < grid + interval => {
                out.push(r.clone());
                prev = Some(r.timestamp);
                k += 1;
            }
            Some(r) => {
                // jump straight to the grid cell containing the next record
                let skip = (r.timestamp - t0).num_milliseconds() / interval.num_milliseconds();
                k = (skip as i32).max(k + 1);
            }
            None => break,
        }
    }
    Ok(d.derived(out, interval_secs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn ts(secs: i64) -> DateTime<Utc> {
        Utc.timestamp_opt(1_371_600_000 + secs, 0).unwrap()
    }

    fn dataset(times: &[i64], cadence: f64) -> Dataset {
        let recs = times.iter().map(|&t| ScadaRecord::empty(ts(t))).collect();
        Dataset::new(recs, cadence, Provenance::Source("test".into())).unwrap()
    }

    fn with_states(states: &[u8]) -> Dataset {
        let recs = states
            .iter()
            .enumerate()
            .map(|(i, &s)| {
                let mut r = ScadaRecord::empty(ts(240 * i as i64));
                r.operating_state = OperatingState::from_code(s as i64);
                r
            })
            .collect();
        Dataset::new(recs, 240.0, Provenance::Source("test".into())).unwrap()
    }

    #[test]
    fn new_rejects_unsorted_and_duplicates() {
        let recs = vec![ScadaRecord::empty(ts(10)), ScadaRecord::empty(ts(0))];
        assert!(matches!(
            Dataset::new(recs, 1.0, Provenance::Source("x".into())),
            Err(IngestError::UnsortedRecords(1))
        ));
        let recs = vec![ScadaRecord::empty(ts(0)), ScadaRecord::empty(ts(0))];
        assert!(Dataset::new(recs, 1.0, Provenance::Source("x".into())).is_err());
    }

    #[test]
    fn filter_running_keeps_state_three() {
        let d = with_states(&[3, 1, 3, 0, 2]);
        let f = filter_running(&d);
        assert_eq!(f.len(), 2);
        assert!(f.records().iter().all(|r| r.is_running()));
        assert_eq!(f.records()[1].timestamp, ts(480));

        let all = with_states(&[3, 3, 3]);
        assert_eq!(filter_running(&all), all);
    }

    #[test]
    fn subsample_empty_is_empty() {
        let d = dataset(&[], 240.0);
        assert!(subsample(&d, TimeDelta::hours(4)).unwrap().is_empty());
    }

    #[test]
    fn subsample_full_day_every_four_hours() {
        // 0, 4 min, ..., 24 h inclusive
        let times: Vec<i64> = (0..=360).map(|i| i * 240).collect();
        let d = dataset(&times, 240.0);
        let s = subsample(&d, TimeDelta::hours(4)).unwrap();
        assert_eq!(s.len(), 7);
        for (k, r) in s.records().iter().enumerate() {
            assert_eq!(r.timestamp, ts(k as i64 * 4 * 3600));
        }
        assert_eq!(s.cadence_secs(), 4.0 * 3600.0);
    }

    #[test]
    fn subsample_skips_grid_points_inside_gap() {
        // records every 4 min for 4 h, then nothing for 8 h, then 4 h more
        let mut times: Vec<i64> = (0..60).map(|i| i * 240).collect();
        times.extend((0..60).map(|i| 12 * 3600 + i * 240));
        let d = dataset(&times, 240.0);
        let s = subsample(&d, TimeDelta::hours(4)).unwrap();
        let got: Vec<_> = s.records().iter().map(|r| r.timestamp).collect();
        // grid 4h and 8h fall in the gap
        assert_eq!(got, vec![ts(0), ts(12 * 3600)]);
    }

    #[test]
    fn subsample_rejects_interval_below_cadence() {
        let d = dataset(&[0, 240, 480], 240.0);
        assert!(matches!(
            subsample(&d, TimeDelta::seconds(60)),
            Err(IngestError::InvalidInterval { .. })
        ));
    }

    #[test]
    fn subsample_keeps_spacing_with_jitter() {
        let times = [0, 3590, 3600, 7190, 7300, 10800];
        let d = dataset(&times, 1.0);
        let s = subsample(&d, TimeDelta::hours(1)).unwrap();
        let got: Vec<_> = s.records().iter().map(|r| r.timestamp).collect();
        for w in got.windows(2) {
            assert!(w[1] - w[0] >= TimeDelta::hours(1));
        }
        // 10800 is only 3500 s after 7300
        assert_eq!(got, vec![ts(0), ts(3600), ts(7300)]);
    }

    #[test]
    fn window_and_until() {
        let d = dataset(&[0, 10, 20, 30], 10.0);
        assert_eq!(d.window(ts(10), ts(20)).len(), 2);
        assert_eq!(d.until(ts(25)).len(), 3);
        assert_eq!(d.median_gap_secs(), Some(10.0));
        assert!(d.cadence_consistent(0.0));
    }
}

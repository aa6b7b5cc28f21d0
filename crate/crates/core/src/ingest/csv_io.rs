use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use chrono::{DateTime, NaiveDate, NaiveDateTime, SecondsFormat, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{median_gap_secs, Dataset, IngestError, OperatingState, Provenance, ScadaRecord};
use crate::field::{Field, VibrationMeasure};

const TIMESTAMP_KEY: &str = "timestamp";
const STATE_KEY: &str = "operating_state";

/// Maps logical field names to CSV column headers. Order is significant: it
/// is the column order used when a dataset is written back out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema {
    columns: IndexMap<String, String>,
}

enum Slot {
    Timestamp,
    State,
    Value(Field),
}

impl Default for Schema {
    /// Identity mapping over every named field plus one generator-bearing
    /// vibration channel.
    fn default() -> Self {
        let mut columns = IndexMap::new();
        columns.insert(TIMESTAMP_KEY.to_string(), TIMESTAMP_KEY.to_string());
        columns.insert(STATE_KEY.to_string(), STATE_KEY.to_string());
        let vib = [
            Field::vibration("gen_bearing_de", VibrationMeasure::Velocity),
            Field::vibration("gen_bearing_de", VibrationMeasure::Acceleration),
        ];
        for f in Field::scalars().chain(vib) {
            columns.insert(f.to_string(), f.to_string());
        }
        Self { columns }
    }
}

impl Schema {
    pub fn new(columns: IndexMap<String, String>) -> Result<Self, IngestError> {
        let schema = Self { columns };
        schema.slots()?;
        Ok(schema)
    }

    /// Identity schema over exactly these fields.
    pub fn for_fields<'a>(fields: impl IntoIterator<Item = &'a Field>) -> Self {
        let mut columns = IndexMap::new();
        columns.insert(TIMESTAMP_KEY.to_string(), TIMESTAMP_KEY.to_string());
        columns.insert(STATE_KEY.to_string(), STATE_KEY.to_string());
        for f in fields {
            columns.insert(f.to_string(), f.to_string());
        }
        Self { columns }
    }

    pub fn columns(&self) -> impl Iterator<Item = (&str, &str)> {
        self.columns.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Numeric fields covered by the schema.
    pub fn fields(&self) -> Vec<Field> {
        self.columns
            .keys()
            .filter_map(|k| k.parse::<Field>().ok())
            .collect()
    }

    /// Check a deserialized schema: a timestamp column and known field names.
    pub fn validate(&self) -> Result<(), IngestError> {
        self.slots().map(|_| ())
    }

    pub fn contains(&self, field: &Field) -> bool {
        self.columns.contains_key(&field.to_string())
    }

    fn slots(&self) -> Result<Vec<(Slot, &str)>, IngestError> {
        if !self.columns.contains_key(TIMESTAMP_KEY) {
            return Err(IngestError::InvalidSchema(
                "schema has no `timestamp` entry".into(),
            ));
        }
        self.columns
            .iter()
            .map(|(logical, column)| {
                let slot = match logical.as_str() {
                    TIMESTAMP_KEY => Slot::Timestamp,
                    STATE_KEY => Slot::State,
                    other => Slot::Value(other.parse().map_err(
                        |e: crate::field::UnknownFieldName| {
                            IngestError::InvalidSchema(e.to_string())
                        },
                    )?),
                };
                Ok((slot, column.as_str()))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    /// How many positions a row may be displaced backwards and still be
    /// put back in order. Zero demands strictly increasing input.
    pub reorder_buffer: usize,
    /// Cadence assumed when fewer than two records survive parsing.
    pub nominal_cadence_secs: f64,
    pub source_name: String,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            reorder_buffer: 0,
            nominal_cadence_secs: 240.0,
            source_name: "stdin".into(),
        }
    }
}

/// Row accounting for one parse. `accepted_rows + rejected_timestamp +
/// rejected_duplicate == total_rows` always holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct IngestReport {
    pub total_rows: usize,
    pub accepted_rows: usize,
    pub rejected_timestamp: usize,
    pub rejected_duplicate: usize,
    pub ignored_columns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub dataset: Dataset,
    pub report: IngestReport,
}

/// Parse an ISO-8601 timestamp. Values without an offset are taken as UTC.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.with_timezone(&Utc));
    }
    for fmt in [
        "%Y-%m-%dT%H:%M:%S%.f",
        "%Y-%m-%d %H:%M:%S%.f",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t.and_utc());
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .map(|t| t.and_utc())
}

pub fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_state(cell: &str) -> Option<OperatingState> {
    let v = parse_number(cell)?;
    if v.fract() != 0.0 {
        return None;
    }
    OperatingState::from_code(v as i64)
}

/// Parse SCADA telemetry from CSV.
///
/// Unparseable numeric cells become missing values; rows whose timestamp
/// cannot be parsed, and rows repeating an already accepted timestamp, are
/// rejected and counted.
pub fn parse_scada_csv<R: Read>(
    source: R,
    schema: &Schema,
    opts: &IngestOptions,
) -> Result<Ingested, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader.headers()?.clone();

    let slots = schema.slots()?;
    let mut bound = Vec::with_capacity(slots.len());
    for (slot, column) in slots {
        let idx = headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| IngestError::MissingColumn(column.to_string()))?;
        bound.push((slot, idx));
    }
    let ignored_columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| !bound.iter().any(|(_, j)| j == i))
        .map(|(_, h)| h.to_string())
        .collect();
    if !ignored_columns.is_empty() {
        log::info!("ignoring {} unmapped CSV columns", ignored_columns.len());
    }

    let mut report = IngestReport {
        ignored_columns,
        ..IngestReport::default()
    };
    let mut out: Vec<ScadaRecord> = Vec::new();
    let mut pending: BinaryHeap<Reverse<(DateTime<Utc>, usize)>> = BinaryHeap::new();
    let mut parked: Vec<Option<ScadaRecord>> = Vec::new();

    let emit = |out: &mut Vec<ScadaRecord>,
                report: &mut IngestReport,
                rec: ScadaRecord,
                row: usize|
     -> Result<(), IngestError> {
        if let Some(last) = out.last() {
            if rec.timestamp == last.timestamp {
                report.rejected_duplicate += 1;
                return Ok(());
            }
            if rec.timestamp < last.timestamp {
                return Err(IngestError::NonMonotoneTimestamps {
                    row,
                    timestamp: rec.timestamp,
                });
            }
        }
        report.accepted_rows += 1;
        out.push(rec);
        Ok(())
    };

    for (row_idx, row) in reader.records().enumerate() {
        let row = row?;
        let row_no = row_idx + 1;
        report.total_rows += 1;

        let mut rec: Option<ScadaRecord> = None;
        let mut state = None;
        let mut values = Vec::new();
        for (slot, idx) in &bound {
            let cell = row.get(*idx).unwrap_or("");
            match slot {
                Slot::Timestamp => rec = parse_timestamp(cell).map(ScadaRecord::empty),
                Slot::State => state = parse_state(cell),
                Slot::Value(f) => values.push((f, parse_number(cell))),
            }
        }
        let Some(mut rec) = rec else {
            report.rejected_timestamp += 1;
            log::debug!("row {row_no}: unparseable timestamp");
            continue;
        };
        rec.operating_state = state;
        for (f, v) in values {
            rec.set(f, v);
        }

        pending.push(Reverse((rec.timestamp, parked.len())));
        parked.push(Some(rec));
        if pending.len() > opts.reorder_buffer {
            let Reverse((_, slot)) = pending.pop().expect("non-empty heap");
            let rec = parked[slot].take().expect("parked once");
            emit(&mut out, &mut report, rec, row_no)?;
        }
    }
    let total = report.total_rows;
    while let Some(Reverse((_, slot))) = pending.pop() {
        let rec = parked[slot].take().expect("parked once");
        emit(&mut out, &mut report, rec, total)?;
    }

    if report.total_rows == 0 {
        return Err(IngestError::EmptyInput);
    }
    let cadence = median_gap_secs(&out).unwrap_or(opts.nominal_cadence_secs);
    let dataset = Dataset::new(out, cadence, Provenance::Source(opts.source_name.clone()))?;
    Ok(Ingested { dataset, report })
}

/// Write a dataset in the same CSV dialect `parse_scada_csv` reads, with
/// columns in schema order. Missing values are empty cells.
pub fn write_dataset_csv<W: Write>(
    d: &Dataset,
    schema: &Schema,
    sink: W,
) -> Result<(), IngestError> {
    let slots = schema.slots()?;
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(slots.iter().map(|(_, c)| *c))?;
    let mut row: Vec<String> = Vec::with_capacity(slots.len());
    for rec in d.records() {
        row.clear();
        for (slot, _) in &slots {
            row.push(match slot {
                Slot::Timestamp => format_timestamp(&rec.timestamp),
                Slot::State => rec
                    .operating_state
                    .map(|s| s.code().to_string())
                    .unwrap_or_default(),
                Slot::Value(f) => rec.get(f).map(|v| v.to_string()).unwrap_or_default(),
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> String {
        Schema::default()
            .columns()
            .map(|(_, c)| c.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    fn full_row(ts: &str) -> String {
        let n = Schema::default().columns().count();
        let mut cells = vec![ts.to_string(), "3".to_string()];
        cells.extend((2..n).map(|i| format!("{}.5", i)));
        cells.join(",")
    }

    #[test]
    fn single_complete_row() {
        let csv = format!("{}\n{}\n", header(), full_row("2013-06-19T00:00:00Z"));
        let got = parse_scada_csv(
            csv.as_bytes(),
            &Schema::default(),
            &IngestOptions::default(),
        )
        .unwrap();
        assert_eq!(got.dataset.len(), 1);
        let rec = &got.dataset.records()[0];
        for f in Schema::default().fields() {
            assert!(rec.get(&f).is_some(), "{f} missing");
        }
        assert_eq!(rec.operating_state, Some(OperatingState::Run));
        assert_eq!(got.dataset.cadence_secs(), 240.0);
    }

    #[test]
    fn empty_power_cell_is_missing() {
        let schema = Schema::for_fields(&[Field::WindSpeed, Field::PowerOutput]);
        let csv = "timestamp,operating_state,wind_speed,power_output\n\
                   2013-06-19 00:00:00,3,5.5,\n\
                   2013-06-19 00:04:00,3,5.6,abc\n";
        let got = parse_scada_csv(csv.as_bytes(), &schema, &IngestOptions::default()).unwrap();
        assert_eq!(got.dataset.len(), 2);
        for r in got.dataset.records() {
            assert!(r.power_output.is_none());
            assert!(r.wind_speed.is_some());
        }
    }

    #[test]
    fn missing_column_and_empty_input() {
        let schema = Schema::for_fields(&[Field::WindSpeed]);
        let err = parse_scada_csv(
            "timestamp,operating_state\n2013-06-19,3\n".as_bytes(),
            &schema,
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::MissingColumn(c) if c == "wind_speed"));

        let err = parse_scada_csv(
            "timestamp,operating_state,wind_speed\n".as_bytes(),
            &schema,
            &IngestOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, IngestError::EmptyInput));
    }

    #[test]
    fn strict_order_by_default() {
        let schema = Schema::for_fields(&[]);
        let csv = "timestamp,operating_state\n2013-06-19T00:04:00,3\n2013-06-19T00:00:00,3\n";
        let err = parse_scada_csv(csv.as_bytes(), &schema, &IngestOptions::default()).unwrap_err();
        assert!(matches!(err, IngestError::NonMonotoneTimestamps { .. }));
    }

    #[test]
    fn bad_timestamps_and_duplicates_are_counted() {
        let schema = Schema::for_fields(&[Field::EnvTemp]);
        let csv = "timestamp,operating_state,env_temp,extra\n\
                   2013-06-19T00:00:00Z,3,1,x\n\
                   not-a-time,3,2,x\n\
                   2013-06-19T00:00:00Z,3,3,x\n\
                   2013-06-19T00:04:00Z,7,4,x\n";
        let got = parse_scada_csv(csv.as_bytes(), &schema, &IngestOptions::default()).unwrap();
        let r = &got.report;
        assert_eq!((r.total_rows, r.accepted_rows), (4, 2));
        assert_eq!((r.rejected_timestamp, r.rejected_duplicate), (1, 1));
        assert_eq!(r.ignored_columns, vec!["extra".to_string()]);
        // unknown state code is missing, not an error
        assert_eq!(got.dataset.records()[1].operating_state, None);
    }

    #[test]
    fn renamed_columns() {
        let mut cols = IndexMap::new();
        cols.insert("timestamp".to_string(), "Time".to_string());
        cols.insert("nacelle_temp".to_string(), "NacTemp".to_string());
        let schema = Schema::new(cols).unwrap();
        let csv = "NacTemp,Time\n21.5,2014-01-01T00:00:00Z\n";
        let got = parse_scada_csv(csv.as_bytes(), &schema, &IngestOptions::default()).unwrap();
        assert_eq!(got.dataset.records()[0].nacelle_temp, Some(21.5));
    }

    #[test]
    fn schema_validation() {
        let mut cols = IndexMap::new();
        cols.insert("env_temp".to_string(), "e".to_string());
        assert!(Schema::new(cols.clone()).is_err());
        cols.insert("timestamp".to_string(), "t".to_string());
        cols.insert("bogus".to_string(), "b".to_string());
        assert!(matches!(
            Schema::new(cols),
            Err(IngestError::InvalidSchema(_))
        ));
    }

    #[test]
    fn timestamp_formats() {
        let a = parse_timestamp("2013-10-12T00:00:00Z").unwrap();
        assert_eq!(parse_timestamp("2013-10-12 00:00:00"), Some(a));
        assert_eq!(parse_timestamp("2013-10-12"), Some(a));
        assert_eq!(parse_timestamp("2013-10-12T02:00:00+02:00"), Some(a));
        assert_eq!(format_timestamp(&a), "2013-10-12T00:00:00Z");
        assert!(parse_timestamp("12/10/2013").is_none());
    }
}

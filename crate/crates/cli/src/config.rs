//! The JSON pipeline configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use windspc_core::chart::{DecimalMark, FixedThresholds, DEFAULT_MIN_BASELINE};
use windspc_core::ingest::Schema;
use windspc_core::regress::ModelTerm;
use windspc_core::simulate::{FaultSpec, ScenarioConfig};
use windspc_core::Field;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum InputConfig {
    Csv {
        path: PathBuf,
    },
    Simulate {
        #[serde(default)]
        scenario: ScenarioConfig,
        #[serde(default)]
        faults: Vec<FaultSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub reorder_buffer: usize,
    /// Drop records whose operating state is not Run.
    pub filter_running: bool,
    /// Relative tolerance for the cadence check; a mismatch is only logged.
    pub cadence_tolerance: f64,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            reorder_buffer: 0,
            filter_running: true,
            cadence_tolerance: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    pub pair: (Field, Field),
    pub min_points: usize,
    pub upper_bound: Option<DateTime<Utc>>,
    /// CSV of `timestamp,label`; the first event bounds the search when
    /// `upper_bound` is unset.
    pub events_csv: Option<PathBuf>,
    /// Compute the correlation profile on data subsampled to this interval
    /// instead of the native cadence.
    pub subsample_secs: Option<f64>,
    /// Skip detection and use this window end.
    pub end_override: Option<DateTime<Utc>>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            pair: (Field::NacelleTemp, Field::EnvTemp),
            min_points: 100,
            upper_bound: None,
            events_csv: None,
            subsample_secs: None,
            end_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub response: Field,
    /// Candidate terms when `select` is on, otherwise the model terms.
    pub terms: Vec<ModelTerm>,
    #[serde(default)]
    pub select: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChartConfig {
    pub fit_interval_secs: f64,
    /// `None` monitors at the native cadence.
    pub monitor_interval_secs: Option<f64>,
    pub min_baseline: usize,
    /// Width of the descriptive alarm-count windows.
    pub cluster_window_secs: f64,
}

impl Default for ChartConfig {
    fn default() -> Self {
        Self {
            fit_interval_secs: 4.0 * 3600.0,
            monitor_interval_secs: None,
            min_baseline: DEFAULT_MIN_BASELINE,
            cluster_window_secs: 86_400.0,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: InputConfig,
    #[serde(default)]
    pub schema: Schema,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub models: Vec<ModelSpec>,
    #[serde(default)]
    pub chart: ChartConfig,
    /// Fixed vendor thresholds, compared against raw readings.
    #[serde(default)]
    pub thresholds: BTreeMap<Field, FixedThresholds>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub locale: DecimalMark,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a config file. Relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let InputConfig::Csv { path } = &mut self.input {
            fix(path);
        }
        if let Some(p) = &mut self.baseline.events_csv {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        self.schema
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (a, b) = &self.baseline.pair;
        for f in [a, b] {
            if !self.schema.contains(f) {
                return bad(format!("baseline field `{f}` is not in the schema"));
            }
        }
        if self.baseline.min_points < 3 {
            return bad("baseline.min_points must be at least 3".into());
        }
        for m in &self.models {
            let fields = std::iter::once(&m.response).chain(m.terms.iter().map(|t| &t.variable));
            for f in fields {
                if !self.schema.contains(f) {
                    return bad(format!("model field `{f}` is not in the schema"));
                }
            }
        }
        let stems: Vec<String> = self.models.iter().map(|m| m.response.file_stem()).collect();
        if (1..stems.len()).any(|i| stems[..i].contains(&stems[i])) {
            return bad("two models share a response variable".into());
        }
        let intervals = [
            Some(self.chart.fit_interval_secs),
            self.chart.monitor_interval_secs,
        ]
        .into_iter()
        .chain([
            self.baseline.subsample_secs,
            Some(self.chart.cluster_window_secs),
        ])
        .flatten();
        for s in intervals {
            if !(s > 0.0 && s.is_finite()) {
                return bad(format!("interval {s} must be a positive number of seconds"));
            }
        }
        for (f, t) in &self.thresholds {
            t.validate()
                .map_err(|e| CliError::Config(format!("thresholds for `{f}`: {e}")))?;
            if !self.schema.contains(f) {
                return bad(format!("threshold field `{f}` is not in the schema"));
            }
        }
        if let InputConfig::Simulate { scenario, .. } = &self.input {
            scenario
                .validate()
                .map_err(|e| CliError::Config(e.to_string()))?;
        }
        Ok(())
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let InputConfig::Simulate { scenario, .. } = &mut self.input {
            scenario.seed = seed;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = PipelineConfig::from_json(r#"{"input": {"simulate": {}}}"#).unwrap();
        assert_eq!(cfg.baseline.pair, (Field::NacelleTemp, Field::EnvTemp));
        assert_eq!(cfg.baseline.min_points, 100);
        assert_eq!(cfg.chart.fit_interval_secs, 14_400.0);
        assert_eq!(cfg.chart.monitor_interval_secs, None);
        assert_eq!(cfg.locale, DecimalMark::Dot);
        assert_eq!(cfg.output_dir, PathBuf::from("out"));
    }

    #[test]
    fn full_config_parses() {
        let text = r#"{
            "input": {"csv": {"path": "data.csv"}},
            "baseline": {"pair": ["nacelle_temp", "env_temp"], "min_points": 50,
                         "upper_bound": "2013-11-16T00:00:00Z"},
            "models": [{"response": "nacelle_temp", "terms": [{"variable": "env_temp"}]},
                       {"response": "vibration.gen_bearing_de.velocity",
                        "terms": [{"variable": "wind_speed", "power": 3},
                                  {"variable": "gen1_temp"}], "select": true}],
            "thresholds": {"vibration.gen_bearing_de.velocity": {"warning": 1.06, "alarm": 2.12}},
            "locale": "comma"
        }"#;
        let cfg = PipelineConfig::from_json(text).unwrap();
        assert_eq!(cfg.models[1].terms[0], ModelTerm::new(Field::WindSpeed, 3));
        assert!(cfg.models[1].select);
        assert_eq!(cfg.locale, DecimalMark::Comma);
        assert_eq!(cfg.thresholds.len(), 1);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        let cases = [
            r#"{"input": {"simulate": {}}, "baseline": {"min_points": 2}}"#,
            r#"{"input": {"simulate": {}}, "models": [{"response": "nope", "terms": []}]}"#,
            r#"{"input": {"simulate": {}}, "chart": {"fit_interval_secs": 0}}"#,
            r#"{"input": {"simulate": {"scenario": {"wind": {"phi": 1.5}}}}}"#,
            r#"{"input": {"simulate": {}}, "thresholds": {"yaw": {"warning": 2, "alarm": 1}}}"#,
            r#"{"input": {"simulate": {}}, "schema": {"wind_speed": "ws"}}"#,
            r#"{"input": {"simulate": {}}, "unknown": 1}"#,
        ];
        for c in cases {
            assert!(
                matches!(PipelineConfig::from_json(c), Err(CliError::Config(_))),
                "{c}"
            );
        }
    }
}

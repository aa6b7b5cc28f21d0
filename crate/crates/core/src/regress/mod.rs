//! Linear regression of one SCADA variable on polynomial terms of others.
//!
//! Models are fitted by least squares over the records where the response
//! and every term variable are present. Records with gaps are dropped and
//! the drop is reported on the fitted model.

mod lsq;
mod stats;
mod subset;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::field::Field;
use crate::ingest::{Dataset, ScadaRecord};

pub use lsq::{fit_with_intercept, OlsSolution};
pub use stats::{acf, pearson_correlation, pearson_pairwise};
pub use subset::{best_subset, mallows_cp, SubsetCandidate, SubsetSelection, MAX_CANDIDATES};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegressError {
    #[error("design matrix is rank deficient (collinear or constant terms)")]
    RankDeficient,
    #[error("insufficient data: {n} usable rows, need at least {needed}")]
    InsufficientData { n: usize, needed: usize },
    #[error("record is missing field `{0}`")]
    MissingField(Field),
    #[error("full model has zero residual variance; Mallows' Cp is undefined")]
    DegenerateFullModel,
    #[error("{0} candidate terms exceed the exhaustive search limit")]
    TooManyCandidates(usize),
    #[error("series has zero variance")]
    ZeroVariance,
    #[error("series lengths differ ({a} vs {b})")]
    LengthMismatch { a: usize, b: usize },
    #[error("series of length {len} is too short, need {needed}")]
    SeriesTooShort { len: usize, needed: usize },
    #[error("invalid term set: {0}")]
    InvalidTerm(String),
    #[error("unsupported model format version {0}")]
    UnsupportedVersion(u32),
    #[error("malformed model document: {0}")]
    Malformed(String),
}

/// A raw variable raised to a positive integer power.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModelTerm {
    pub variable: Field,
    #[serde(default = "one")]
    pub power: u32,
}

fn one() -> u32 {
    1
}

impl ModelTerm {
    pub fn new(variable: Field, power: u32) -> Self {
        Self { variable, power }
    }

    pub fn linear(variable: Field) -> Self {
        Self::new(variable, 1)
    }

    pub fn eval(&self, record: &ScadaRecord) -> Option<f64> {
        record
            .get(&self.variable)
            .map(|v| v.powi(self.power as i32))
    }

    fn sort_key(&self) -> (String, u32) {
        (self.variable.to_string(), self.power)
    }
}

impl fmt::Display for ModelTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.power == 1 {
            write!(f, "{}", self.variable)
        } else {
            write!(f, "{}^{}", self.variable, self.power)
        }
    }
}

pub(crate) fn validate_terms(terms: &[ModelTerm]) -> Result<(), RegressError> {
    for (i, t) in terms.iter().enumerate() {
        if t.power == 0 {
            return Err(RegressError::InvalidTerm(format!(
                "{} has power 0",
                t.variable
            )));
        }
        if terms[..i].contains(t) {
            return Err(RegressError::InvalidTerm(format!("duplicate term {t}")));
        }
    }
    Ok(())
}

/// One row of the coefficient table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    /// `None` when the standard error is zero (exact fit).
    pub t_value: Option<f64>,
    pub p_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionModel {
    pub response: Field,
    pub terms: Vec<ModelTerm>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Rows used for the fit.
    pub n: usize,
    /// Rows dropped because a required value was missing.
    pub n_dropped: usize,
    pub sse: f64,
    pub sigma2_hat: f64,
    pub intercept_std_error: f64,
    pub std_errors: Vec<f64>,
    /// Intercept first, then one row per term.
    pub table: Vec<CoefficientRow>,
}

#[derive(Serialize)]
struct ModelDocumentOut<'a> {
    format_version: u32,
    model: &'a RegressionModel,
}

#[derive(Deserialize)]
struct ModelDocumentIn {
    format_version: u32,
    model: RegressionModel,
}

impl RegressionModel {
    pub fn df(&self) -> usize {
        self.n - self.terms.len() - 1
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocumentOut {
            format_version: MODEL_FORMAT_VERSION,
            model: self,
        })
        .expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, RegressError> {
        let doc: ModelDocumentIn =
            serde_json::from_str(s).map_err(|e| RegressError::Malformed(e.to_string()))?;
        if doc.format_version != MODEL_FORMAT_VERSION {
            return Err(RegressError::UnsupportedVersion(doc.format_version));
        }
        let m = doc.model;
        if m.coefficients.len() != m.terms.len() || m.std_errors.len() != m.terms.len() {
            return Err(RegressError::Malformed(
                "coefficient count does not match term count".into(),
            ));
        }
        Ok(m)
    }

    fn from_solution(
        response: Field,
        terms: Vec<ModelTerm>,
        sol: &OlsSolution,
        n_dropped: usize,
    ) -> Self {
        let n = sol.residuals.len();
        let df = sol.df();
        let tdist = StudentsT::new(0.0, 1.0, df as f64).ok();
        let row = |name: String, estimate: f64, se: f64| {
            let t = (se > 0.0).then(|| estimate / se);
            let p = match (t, &tdist) {
                (Some(t), Some(d)) => Some((2.0 * d.sf(t.abs())).min(1.0)),
                _ => None,
            };
            CoefficientRow {
                name,
                estimate,
                std_error: se,
                t_value: t,
                p_value: p,
            }
        };
        let mut table = vec![row(
            "(intercept)".to_string(),
            sol.intercept,
            sol.intercept_std_error,
        )];
        for ((t, c), se) in terms.iter().zip(&sol.coefficients).zip(&sol.std_errors) {
            table.push(row(t.to_string(), *c, *se));
        }
        Self {
            response,
            terms,
            intercept: sol.intercept,
            coefficients: sol.coefficients.clone(),
            n,
            n_dropped,
            sse: sol.sse,
            sigma2_hat: sol.sigma2,
            intercept_std_error: sol.intercept_std_error,
            std_errors: sol.std_errors.clone(),
            table,
        }
    }
}

/// Response and term columns over the complete rows of a dataset.
pub(crate) struct Design {
    pub y: Vec<f64>,
    pub columns: Vec<Vec<f64>>,
    pub dropped: usize,
}

pub(crate) fn design(d: &Dataset, response: &Field, terms: &[ModelTerm]) -> Design {
    let mut y = Vec::with_capacity(d.len());
    let mut columns = vec![Vec::with_capacity(d.len()); terms.len()];
    let mut dropped = 0;
    let mut row = Vec::with_capacity(terms.len());
    for rec in d.records() {
        row.clear();
        let complete = rec.get(response).is_some()
            && terms.iter().all(|t| match t.eval(rec) {
                Some(v) => {
                    row.push(v);
                    true
                }
                None => false,
            });
        if !complete {
            dropped += 1;
            continue;
        }
        y.push(rec.get(response).expect("checked above"));
        for (col, v) in columns.iter_mut().zip(&row) {
            col.push(*v);
        }
    }
    Design {
        y,
        columns,
        dropped,
    }
}

/// Ordinary least squares fit of `response` on an intercept plus `terms`.
pub fn ols_fit(
    d: &Dataset,
    response: &Field,
    terms: &[ModelTerm],
) -> Result<RegressionModel, RegressError> {
    validate_terms(terms)?;
    let design = design(d, response, terms);
    let sol = fit_with_intercept(&design.columns, &design.y)?;
    Ok(RegressionModel::from_solution(
        response.clone(),
        terms.to_vec(),
        &sol,
        design.dropped,
    ))
}

/// Point prediction for one record.
pub fn predict(m: &RegressionModel, r: &ScadaRecord) -> Result<f64, RegressError> {
    let mut acc = m.intercept;
    for (t, c) in m.terms.iter().zip(&m.coefficients) {
        let v = t
            .eval(r)
            .ok_or_else(|| RegressError::MissingField(t.variable.clone()))?;
        acc += c * v;
    }
    Ok(acc)
}

/// `(timestamp, actual - predicted)` in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSeries {
    pub points: Vec<(DateTime<Utc>, f64)>,
    /// Records skipped for a missing response or term value.
    pub skipped: usize,
}

impl ResidualSeries {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|(_, v)| *v).collect()
    }

    /// Residuals with `t <= end`.
    pub fn until(&self, end: DateTime<Utc>) -> Vec<f64> {
        self.points
            .iter()
            .take_while(|(t, _)| *t <= end)
            .map(|(_, v)| *v)
            .collect()
    }
}

pub fn residual_series(m: &RegressionModel, d: &Dataset) -> ResidualSeries {
    let mut points = Vec::with_capacity(d.len());
    let mut skipped = 0;
    for rec in d.records() {
        match (rec.get(&m.response), predict(m, rec)) {
            (Some(actual), Ok(pred)) => points.push((rec.timestamp, actual - pred)),
            _ => skipped += 1,
        }
    }
    ResidualSeries { points, skipped }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Provenance;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn ts(i: usize) -> DateTime<Utc> {
        Utc.timestamp_opt(1_400_000_000 + 240 * i as i64, 0)
            .unwrap()
    }

    fn dataset(rows: &[(f64, f64)]) -> Dataset {
        let recs = rows
            .iter()
            .enumerate()
            .map(|(i, (env, nac))| {
                let mut r = ScadaRecord::empty(ts(i));
                r.env_temp = Some(*env);
                r.nacelle_temp = Some(*nac);
                r
            })
            .collect();
        Dataset::new(recs, 240.0, Provenance::Source("test".into())).unwrap()
    }

    fn nacelle_model() -> RegressionModel {
        let sol = OlsSolution {
            intercept: 7.54899,
            coefficients: vec![0.94560],
            residuals: vec![0.0; 10],
            sse: 0.0,
            sigma2: 0.0,
            intercept_std_error: 0.0,
            std_errors: vec![0.0],
        };
        RegressionModel::from_solution(
            Field::NacelleTemp,
            vec![ModelTerm::linear(Field::EnvTemp)],
            &sol,
            0,
        )
    }

    #[test]
    fn exact_linear_fit() {
        let rows: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        let m = ols_fit(
            &dataset(&rows),
            &Field::NacelleTemp,
            &[ModelTerm::linear(Field::EnvTemp)],
        )
        .unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-10);
        assert!((m.coefficients[0] - 2.0).abs() < 1e-10);
        assert!(m.sse < 1e-10);
        assert_eq!(m.n, 10);
    }

    #[test]
    fn missing_rows_are_dropped_and_counted() {
        let rows: Vec<(f64, f64)> = (0..12).map(|i| (i as f64, 3.0 - i as f64)).collect();
        let mut d = dataset(&rows).records().to_vec();
        d[3].env_temp = None;
        d[7].nacelle_temp = None;
        let d = Dataset::new(d, 240.0, Provenance::Source("t".into())).unwrap();
        let m = ols_fit(
            &d,
            &Field::NacelleTemp,
            &[ModelTerm::linear(Field::EnvTemp)],
        )
        .unwrap();
        assert_eq!((m.n, m.n_dropped), (10, 2));
    }

    #[test]
    fn invalid_terms_rejected() {
        let d = dataset(&[(1.0, 2.0), (2.0, 3.0), (3.0, 5.0)]);
        let dup = [
            ModelTerm::linear(Field::EnvTemp),
            ModelTerm::linear(Field::EnvTemp),
        ];
        assert!(matches!(
            ols_fit(&d, &Field::NacelleTemp, &dup),
            Err(RegressError::InvalidTerm(_))
        ));
        let zero = [ModelTerm::new(Field::EnvTemp, 0)];
        assert!(ols_fit(&d, &Field::NacelleTemp, &zero).is_err());
    }

    #[test]
    fn predict_on_table_coefficients() {
        let m = nacelle_model();
        let mut r = ScadaRecord::empty(ts(0));
        r.env_temp = Some(0.0);
        assert_eq!(predict(&m, &r).unwrap(), 7.54899);
        r.env_temp = Some(10.0);
        assert!((predict(&m, &r).unwrap() - 17.00499).abs() < 1e-12);
        r.env_temp = None;
        assert_eq!(
            predict(&m, &r),
            Err(RegressError::MissingField(Field::EnvTemp))
        );
    }

    #[test]
    fn residuals_of_constant_model() {
        let mut m = nacelle_model();
        m.coefficients = vec![0.0];
        m.intercept = 4.0;
        let d = dataset(&[(1.0, 5.0), (2.0, 3.5), (3.0, 4.0)]);
        let rs = residual_series(&m, &d);
        assert_eq!(rs.values(), vec![1.0, -0.5, 0.0]);
        assert_eq!(rs.skipped, 0);
    }

    #[test]
    fn residuals_skip_incomplete_records() {
        let m = nacelle_model();
        let mut recs = dataset(&[(1.0, 5.0), (2.0, 3.5), (3.0, 4.0)])
            .records()
            .to_vec();
        recs[1].env_temp = None;
        let d = Dataset::new(recs, 240.0, Provenance::Source("t".into())).unwrap();
        let rs = residual_series(&m, &d);
        assert_eq!((rs.points.len(), rs.skipped), (2, 1));
    }

    #[test]
    fn model_json_round_trip_is_exact() {
        let rows: Vec<(f64, f64)> = (0..30)
            .map(|i| {
                (
                    i as f64 * 0.37,
                    7.5 + 0.95 * i as f64 * 0.37 + ((i * 7) % 5) as f64 * 0.1,
                )
            })
            .collect();
        let m = ols_fit(
            &dataset(&rows),
            &Field::NacelleTemp,
            &[ModelTerm::linear(Field::EnvTemp)],
        )
        .unwrap();
        let back = RegressionModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.to_json().contains("\"format_version\": 1"));
    }

    #[test]
    fn model_json_version_checked() {
        let json = nacelle_model()
            .to_json()
            .replace("\"format_version\": 1", "\"format_version\": 9");
        assert_eq!(
            RegressionModel::from_json(&json),
            Err(RegressError::UnsupportedVersion(9))
        );
    }

    #[test]
    fn term_display() {
        assert_eq!(
            ModelTerm::new(Field::WindSpeed, 3).to_string(),
            "wind_speed^3"
        );
        assert_eq!(ModelTerm::linear(Field::Gen1Temp).to_string(), "gen1_temp");
    }

    proptest! {
        #[test]
        fn training_residuals_sum_to_zero_and_sse_is_minimal(
            rows in prop::collection::vec((-20.0f64..40.0, -5.0f64..5.0), 8..60),
            delta in prop::collection::vec(-1e-3f64..1e-3, 2),
        ) {
            let data: Vec<(f64, f64)> = rows.iter().map(|(e, n)| (*e, 3.0 + 0.8 * e + n)).collect();
            let d = dataset(&data);
            let Ok(m) = ols_fit(&d, &Field::NacelleTemp, &[ModelTerm::linear(Field::EnvTemp)]) else {
                return Ok(());
            };
            let rs = residual_series(&m, &d).values();
            let scale = data.iter().map(|(_, y)| y.abs()).fold(1.0, f64::max);
            prop_assert!(rs.iter().sum::<f64>().abs() <= 1e-8 * rs.len() as f64 * scale);

            let sse_at = |b0: f64, b1: f64| data.iter().map(|(x, y)| (y - b0 - b1 * x).powi(2)).sum::<f64>();
            let perturbed = sse_at(m.intercept + delta[0], m.coefficients[0] + delta[1]);
            prop_assert!(m.sse <= perturbed + 1e-9 * m.sse.max(1.0));
        }

        #[test]
        fn predict_matches_polynomial(x in -30.0f64..30.0, c in prop::collection::vec(-2.0f64..2.0, 3)) {
            let mut m = nacelle_model();
            m.terms = vec![
                ModelTerm::new(Field::WindSpeed, 1),
                ModelTerm::new(Field::WindSpeed, 2),
                ModelTerm::new(Field::WindSpeed, 3),
            ];
            m.coefficients = c.clone();
            let mut r = ScadaRecord::empty(ts(0));
            for v in [x, 2.0 * x] {
                r.wind_speed = Some(v);
                let want = m.intercept + c[0] * v + c[1] * v * v + c[2] * v * v * v;
                let got = predict(&m, &r).unwrap();
                prop_assert!((got - want).abs() <= 1e-12 * want.abs().max(1.0));
            }
        }
    }
}

use chrono::{DateTime, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SimulateError;
use crate::field::Field;
use crate::ingest::{Dataset, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    /// Add `magnitude` from onset on.
    MeanShift,
    /// Add `magnitude` per day elapsed since onset.
    LinearDrift,
    /// Swap a `magnitude` fraction of the linkage contribution for
    /// independent noise with the same pre-onset mean and spread.
    Decorrelation,
    /// Scale by `1 + magnitude * (t - onset) / span`, `span` being the time
    /// from onset to the end of the data.
    VibrationGrowth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub target: Field,
    pub onset: DateTime<Utc>,
    pub magnitude: f64,
    /// Seeds the replacement noise of a decorrelation fault.
    #[serde(default)]
    pub seed: u64,
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (0.0, 0.0);
    }
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// Apply a fault to every record at or after `f.onset`. Earlier records are
/// returned untouched.
pub fn inject_fault(d: &Dataset, f: &FaultSpec) -> Result<Dataset, SimulateError> {
    if !(f.magnitude > 0.0 && f.magnitude.is_finite()) {
        return Err(SimulateError::InvalidMagnitude(f.magnitude));
    }
    let (Some(first), Some(last)) = (d.first_timestamp(), d.last_timestamp()) else {
        return Err(SimulateError::OnsetOutOfRange);
    };
    if f.onset < first || f.onset > last {
        return Err(SimulateError::OnsetOutOfRange);
    }
    if d.records().iter().all(|r| r.get(&f.target).is_none()) {
        return Err(SimulateError::UnknownField(f.target.clone()));
    }

    let truth = match d.provenance() {
        Provenance::Simulated(gt) => Some(gt.as_ref()),
        Provenance::Source(_) => None,
    };
    let link = truth.and_then(|gt| gt.link(&f.target));
    // linkage contribution; the whole value when the generating model is unknown
    let contribution = |r: &crate::ingest::ScadaRecord| match link {
        Some(l) => l.mean_value(r),
        None => r.get(&f.target),
    };
    let pre: Vec<f64> = d
        .records()
        .iter()
        .filter(|r| r.timestamp < f.onset)
        .filter_map(contribution)
        .collect();
    let (mu, sd) = mean_sd(&pre);
    let mut rng = ChaCha8Rng::seed_from_u64(f.seed);
    let span_secs = (last - f.onset).as_seconds_f64();

    let out = d.map_records(|r| {
        let mut r = r.clone();
        if r.timestamp < f.onset {
            return r;
        }
        let Some(v) = r.get(&f.target) else {
            return r;
        };
        let elapsed = (r.timestamp - f.onset).as_seconds_f64();
        let m = f.magnitude;
        let faulty = match f.kind {
            FaultKind::MeanShift => v + m,
            FaultKind::LinearDrift => v + m * elapsed / 86_400.0,
            FaultKind::Decorrelation => {
                let z: f64 = StandardNormal.sample(&mut rng);
                let xi = mu + sd * z;
                match contribution(&r) {
                    Some(c) => v + m * (xi - c),
                    None => v,
                }
            }
            FaultKind::VibrationGrowth => {
                let frac = if span_secs > 0.0 {
                    elapsed / span_secs
                } else {
                    0.0
                };
                v * (1.0 + m * frac)
            }
        };
        r.set(&f.target, Some(faulty));
        r
    });

    Ok(match d.provenance() {
        Provenance::Simulated(gt) => {
            let mut gt = gt.clone();
            gt.faults.push(f.clone());
            out.with_provenance(Provenance::Simulated(gt))
        }
        Provenance::Source(_) => out,
    })
}

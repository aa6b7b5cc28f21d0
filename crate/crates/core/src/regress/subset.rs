//! Exhaustive subset selection under Mallows' Cp.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use super::lsq::fit_with_intercept;
use super::{design, validate_terms, ModelTerm, RegressError, RegressionModel};
use crate::field::Field;
use crate::ingest::Dataset;

/// Upper bound on candidate terms for exhaustive enumeration.
pub const MAX_CANDIDATES: usize = 20;

/// `SSE_p / sigma2_full - n + 2p`, with `p` counting the intercept.
pub fn mallows_cp(
    candidate_sse: f64,
    candidate_size: usize,
    full_sigma2: f64,
    n: usize,
) -> Result<f64, RegressError> {
    if !(full_sigma2 > 0.0) {
        return Err(RegressError::DegenerateFullModel);
    }
    if n <= candidate_size {
        return Err(RegressError::InsufficientData {
            n,
            needed: candidate_size + 1,
        });
    }
    Ok(candidate_sse / full_sigma2 - n as f64 + 2.0 * candidate_size as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetCandidate {
    pub terms: Vec<ModelTerm>,
    pub cp: f64,
    pub sse: f64,
}

#[derive(Debug, Clone)]
pub struct SubsetSelection {
    pub model: RegressionModel,
    /// Every subset that could be fitted, in bitmask order over the candidates.
    pub candidates: Vec<SubsetCandidate>,
    pub skipped_rank_deficient: usize,
    pub full_sigma2: f64,
}

fn subset_terms(candidates: &[ModelTerm], mask: u32) -> Vec<ModelTerm> {
    candidates
        .iter()
        .enumerate()
        .filter(|(j, _)| mask >> j & 1 == 1)
        .map(|(_, t)| t.clone())
        .collect()
}

fn lexicographic(a: &[ModelTerm], b: &[ModelTerm]) -> Ordering {
    let key = |ts: &[ModelTerm]| {
        let mut k: Vec<_> = ts.iter().map(ModelTerm::sort_key).collect();
        k.sort();
        k
    };
    key(a).cmp(&key(b))
}

/// Fit every subset of `candidates` (intercept always included) and return
/// the model with the smallest Cp. Ties prefer fewer terms, then the
/// lexicographically smaller term list.
pub fn best_subset(
    d: &Dataset,
    response: &Field,
    candidates: &[ModelTerm],
) -> Result<SubsetSelection, RegressError> {
    if candidates.len() > MAX_CANDIDATES {
        return Err(RegressError::TooManyCandidates(candidates.len()));
    }
    validate_terms(candidates)?;
    let design = design(d, response, candidates);
    let n = design.y.len();
    let full = fit_with_intercept(&design.columns, &design.y)?;
    let full_sigma2 = full.sigma2;
    if !(full_sigma2 > 0.0) {
        return Err(RegressError::DegenerateFullModel);
    }

    let k = candidates.len() as u32;
    let fits: Vec<Option<f64>> = (0..1u32 << k)
        .into_par_iter()
        .map(|mask| {
            let cols: Vec<Vec<f64>> = (0..k)
                .filter(|j| mask >> j & 1 == 1)
                .map(|j| design.columns[j as usize].clone())
                .collect();
            fit_with_intercept(&cols, &design.y).ok().map(|sol| sol.sse)
        })
        .collect();

    let mut skipped = 0;
    let mut enumerated = Vec::with_capacity(fits.len());
    for (mask, sse) in fits.into_iter().enumerate() {
        let Some(sse) = sse else {
            skipped += 1;
            continue;
        };
        let terms = subset_terms(candidates, mask as u32);
        let cp = mallows_cp(sse, terms.len() + 1, full_sigma2, n)?;
        enumerated.push(SubsetCandidate { terms, cp, sse });
    }
    if skipped > 0 {
        log::debug!("best_subset: skipped {skipped} rank-deficient subsets");
    }

    let best = enumerated
        .iter()
        .min_by(|a, b| {
            a.cp.total_cmp(&b.cp)
                .then(a.terms.len().cmp(&b.terms.len()))
                .then_with(|| lexicographic(&a.terms, &b.terms))
        })
        .expect("intercept-only subset always fits when the full model does");

    let cols: Vec<Vec<f64>> = best
        .terms
        .iter()
        .map(|t| {
            let j = candidates
                .iter()
                .position(|c| c == t)
                .expect("subset of candidates");
            design.columns[j].clone()
        })
        .collect();
    let sol = fit_with_intercept(&cols, &design.y)?;
    let model =
        RegressionModel::from_solution(response.clone(), best.terms.clone(), &sol, design.dropped);

    Ok(SubsetSelection {
        model,
        candidates: enumerated,
        skipped_rank_deficient: skipped,
        full_sigma2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{Provenance, ScadaRecord};
    use chrono::{TimeZone, Utc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    /// y = 3 + 2a + noise; b and c are unrelated.
    fn synthetic(seed: u64, n: usize, noise: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
        let recs = (0..n)
            .map(|i| {
                let mut r =
                    ScadaRecord::empty(Utc.timestamp_opt(1_400_000_000 + i as i64, 0).unwrap());
                let (a, b, c) = (g(), g(), g());
                r.env_temp = Some(a);
                r.wind_speed = Some(b);
                r.pitch_angle = Some(c);
                r.nacelle_temp = Some(3.0 + 2.0 * a + noise * g());
                r
            })
            .collect();
        Dataset::new(recs, 1.0, Provenance::Source("synthetic".into())).unwrap()
    }

    fn abc() -> Vec<ModelTerm> {
        vec![
            ModelTerm::linear(Field::EnvTemp),
            ModelTerm::linear(Field::WindSpeed),
            ModelTerm::linear(Field::PitchAngle),
        ]
    }

    #[test]
    fn cp_identities() {
        // the full model scores exactly p
        let (sse, p, n) = (12.5, 4, 50);
        let sigma2 = sse / (n - p) as f64;
        assert!((mallows_cp(sse, p, sigma2, n).unwrap() - p as f64).abs() < 1e-10);
        // same sse with fewer terms scores below p_full
        assert!(mallows_cp(sse, p - 2, sigma2, n).unwrap() < p as f64);
        assert_eq!(
            mallows_cp(1.0, 2, 0.0, 10),
            Err(RegressError::DegenerateFullModel)
        );
    }

    #[test]
    fn cp_matches_brute_force_per_subset() {
        let d = synthetic(3, 80, 0.5);
        let sel = best_subset(&d, &Field::NacelleTemp, &abc()).unwrap();
        assert_eq!(sel.candidates.len(), 8);
        let n = 80.0;
        for cand in &sel.candidates {
            let m = super::super::ols_fit(&d, &Field::NacelleTemp, &cand.terms).unwrap();
            let want = m.sse / sel.full_sigma2 - n + 2.0 * (cand.terms.len() + 1) as f64;
            assert!((cand.cp - want).abs() < 1e-9 * want.abs().max(1.0));
        }
    }

    #[test]
    fn selects_the_generating_predictor() {
        let d = synthetic(7, 200, 0.3);
        let sel = best_subset(&d, &Field::NacelleTemp, &abc()).unwrap();
        assert_eq!(sel.model.terms, vec![ModelTerm::linear(Field::EnvTemp)]);
        let min_cp = sel
            .candidates
            .iter()
            .map(|c| c.cp)
            .fold(f64::INFINITY, f64::min);
        let chosen = sel
            .candidates
            .iter()
            .find(|c| c.terms == sel.model.terms)
            .unwrap();
        assert_eq!(chosen.cp, min_cp);
    }

    #[test]
    fn noise_candidate_loses_to_intercept_only() {
        let d = synthetic(1, 60, 1.0);
        let cand = [ModelTerm::linear(Field::PitchAngle)];
        // response without the `a` signal: refit against wind_speed-free data
        let recs: Vec<_> = d
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.nacelle_temp = Some(r.nacelle_temp.unwrap() - 2.0 * r.env_temp.unwrap());
                r
            })
            .collect();
        let d = Dataset::new(recs, 1.0, Provenance::Source("t".into())).unwrap();
        let sel = best_subset(&d, &Field::NacelleTemp, &cand).unwrap();
        let cp_empty = sel
            .candidates
            .iter()
            .find(|c| c.terms.is_empty())
            .unwrap()
            .cp;
        let cp_full = sel
            .candidates
            .iter()
            .find(|c| c.terms.len() == 1)
            .unwrap()
            .cp;
        if cp_empty < cp_full {
            assert!(sel.model.terms.is_empty());
        } else {
            assert_eq!(sel.model.terms.len(), 1);
        }
    }

    #[test]
    fn too_many_candidates() {
        let d = synthetic(1, 30, 1.0);
        let many: Vec<ModelTerm> = (1..=21)
            .map(|p| ModelTerm::new(Field::EnvTemp, p))
            .collect();
        assert_eq!(
            best_subset(&d, &Field::NacelleTemp, &many).unwrap_err(),
            RegressError::TooManyCandidates(21)
        );
    }

    #[test]
    fn collinear_full_model_is_an_error() {
        let recs: Vec<_> = synthetic(9, 50, 0.5)
            .records()
            .iter()
            .map(|r| {
                let mut r = r.clone();
                // a perfect copy of env_temp under another name
                r.yaw = r.env_temp;
                r
            })
            .collect();
        let d = Dataset::new(recs, 1.0, Provenance::Source("t".into())).unwrap();
        let cands = [
            ModelTerm::linear(Field::EnvTemp),
            ModelTerm::linear(Field::Yaw),
            ModelTerm::linear(Field::WindSpeed),
        ];
        // the full model itself is collinear
        assert_eq!(
            best_subset(&d, &Field::NacelleTemp, &cands).unwrap_err(),
            RegressError::RankDeficient
        );
    }
}

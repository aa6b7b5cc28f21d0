use chrono::{TimeZone, Utc};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use windspc_core::ingest::{
    filter_running, parse_scada_csv, write_dataset_csv, Dataset, IngestOptions, OperatingState,
    Provenance, ScadaRecord, Schema,
};
use windspc_core::simulate::{generate_scenario, ScenarioConfig};

fn to_csv(d: &Dataset) -> String {
    let mut buf = Vec::new();
    write_dataset_csv(d, &Schema::default(), &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn simulated_dataset_survives_csv_round_trip() {
    let d = generate_scenario(&ScenarioConfig {
        duration_days: 2.0,
        seed: 8,
        ..Default::default()
    })
    .unwrap();
    let text = to_csv(&d);
    let back = parse_scada_csv(
        text.as_bytes(),
        &Schema::default(),
        &IngestOptions::default(),
    )
    .unwrap();
    assert_eq!(back.report.accepted_rows, d.len());
    assert_eq!(back.dataset.records(), d.records());
    assert_eq!(back.dataset.cadence_secs(), 240.0);
    // and serialising again gives the same bytes
    assert_eq!(to_csv(&back.dataset), text);
}

#[test]
fn filter_matches_independent_recount() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let recs: Vec<ScadaRecord> = (0..1000)
        .map(|i| {
            let mut r = ScadaRecord::empty(Utc.timestamp_opt(1_370_000_000 + 240 * i, 0).unwrap());
            r.operating_state = OperatingState::from_code(rng.random_range(0..4));
            r
        })
        .collect();
    let want = recs
        .iter()
        .filter(|r| r.operating_state.map(|s| s.code()) == Some(3))
        .count();
    let d = Dataset::new(recs, 240.0, Provenance::Source("t".into())).unwrap();
    let kept = filter_running(&d);
    assert_eq!(kept.len(), want);
    assert!(kept.records().iter().all(|r| r.is_running()));
}

/// Rows rotated within consecutive blocks of `k + 1`, so no row moves more
/// than `k` places.
fn locally_shuffled(lines: &[String], k: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(lines.len());
    for chunk in lines.chunks(k + 1) {
        let mut c = chunk.to_vec();
        c.shuffle(&mut rng);
        out.extend(c);
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn reorder_buffer_matches_sort_oracle(k in 1usize..6, n in 2usize..60, seed in 0u64..1000) {
        let d = generate_scenario(&ScenarioConfig {
            duration_days: n as f64 * 240.0 / 86_400.0,
            seed,
            ..Default::default()
        }).unwrap();
        let text = to_csv(&d);
        let mut lines = text.lines().map(str::to_owned);
        let header = lines.next().unwrap();
        let rows: Vec<String> = lines.collect();
        let shuffled = locally_shuffled(&rows, k, seed);

        let mut oracle = shuffled.clone();
        oracle.sort_by_key(|l| l.split(',').next().unwrap().to_owned());
        prop_assert_eq!(&oracle, &rows);

        let input = std::iter::once(header).chain(shuffled).collect::<Vec<_>>().join("\n");
        let opts = IngestOptions { reorder_buffer: k, ..Default::default() };
        let got = parse_scada_csv(input.as_bytes(), &Schema::default(), &opts).unwrap();
        prop_assert_eq!(got.dataset.records(), d.records());
    }
}

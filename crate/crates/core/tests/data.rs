mod oracle;

use std::collections::{BTreeMap, BTreeSet};

use lyricnet_core::data::*;
use proptest::prelude::*;

fn record(id: &str, chars: u32, lang: &str) -> TrackRecord {
    let mut r = synth_dataset(&SynthConfig::new(1, 0, 0)).records.remove(0);
    r.track_id = id.into();
    r.lyrics_char_count = chars;
    r.language = lang.into();
    r
}

#[test]
fn cleaning_boundaries() {
    let recs = vec![
        record("a", 99, "en"),
        record("b", 100, "en"),
        record("c", 7000, "en"),
        record("d", 7001, "en"),
        record("e", 500, "it"),
    ];
    let (kept, tally) = clean_corpus(recs);
    let ids: Vec<&str> = kept.iter().map(|r| r.track_id.as_str()).collect();
    assert_eq!(ids, ["b", "c"]);
    assert_eq!(
        (tally.kept, tally.too_short, tally.too_long, tally.language),
        (2, 1, 1, 1)
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cleaning_is_idempotent(spec in prop::collection::vec((0u32..8000, 0usize..7), 0..40)) {
        let langs = ["en", "es", "pt", "fr", "de", "it", "ja"];
        let recs: Vec<TrackRecord> = spec.iter().enumerate().map(|(i, &(c, l))| record(&format!("r{i}"), c, langs[l])).collect();
        let (once, _) = clean_corpus(recs);
        let (twice, tally) = clean_corpus(once.clone());
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(tally.rejected(), 0);
    }

    #[test]
    fn split_partitions_and_stratifies(n in 40usize..400, k in 2usize..6, bins in 1usize..5, s in any::<u64>()) {
        let ids: Vec<String> = (0..n).map(|i| format!("t{i:04}")).collect();
        let mut rng = lyricnet_core::seed::rng(s);
        let targets: Vec<f32> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.0f32..=1.0)).collect();
        let plan = match stratified_kfold(&ids, &targets, k, bins, s) {
            Ok(p) => p,
            Err(lyricnet_core::Error::SparseStratum { .. }) => return Ok(()),
            Err(e) => panic!("{e}"),
        };
        check_plan(&plan, &ids, &targets)?;
    }

    #[test]
    fn train_fitted_min_max_spans_unit_interval(s in any::<u64>()) {
        let corpus = synth_dataset(&SynthConfig::new(30, s, 0));
        let b = assemble_features(&corpus.records, ModalityMask::of(&[Modality::Hh, Modality::M])).unwrap();
        let train: Vec<usize> = (0..20).collect();
        let t = InputScalers::fit(&b, &train).unwrap().transform(&b).unwrap();
        for m in [&t.hl, &t.meta] {
            for c in 0..m.cols() {
                let col: Vec<f32> = train.iter().map(|&r| m.get(r, c)).collect();
                let lo = col.iter().copied().fold(f32::INFINITY, f32::min);
                let hi = col.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                prop_assert_eq!(lo, 0.0);
                prop_assert!((hi - 1.0).abs() <= 1e-6 || hi == 0.0, "{}", hi);
            }
        }
    }
}

fn check_plan(plan: &SplitPlan, ids: &[String], targets: &[f32]) -> Result<(), TestCaseError> {
    let folds: BTreeSet<&String> = plan.fold_of.keys().collect();
    prop_assert!(folds.iter().all(|id| !plan.test_ids.contains(*id)));
    prop_assert_eq!(folds.len() + plan.test_ids.len(), ids.len());
    let mut counts: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (id, &t) in ids.iter().zip(targets) {
        if let Some(&f) = plan.fold_of.get(id) {
            counts
                .entry(strat_bin(t, plan.strat_bins))
                .or_insert_with(|| vec![0; plan.k])[f] += 1;
        }
    }
    for c in counts.values() {
        prop_assert!(c.iter().max().unwrap() - c.iter().min().unwrap() <= 1, "{:?}", c);
    }
    Ok(())
}

#[test]
fn ten_thousand_record_split() {
    let corpus = synth_dataset(&SynthConfig::new(10_000, 4, 0));
    let ids: Vec<String> = corpus.records.iter().map(|r| r.track_id.clone()).collect();
    let targets: Vec<f32> = corpus.records.iter().map(|r| r.popularity_raw as f32 / 100.0).collect();
    let a = stratified_kfold(&ids, &targets, 5, 10, 77).unwrap();
    check_plan(&a, &ids, &targets).unwrap();
    assert_eq!(a.test_ids.len(), 2000);
    let b = stratified_kfold(&ids, &targets, 5, 10, 77).unwrap();
    assert_eq!(a.fingerprint(), b.fingerprint());
}

#[test]
fn synthetic_round_trips_through_serde() {
    let c = synth_dataset(&SynthConfig {
        with_stylometrics: true,
        ..SynthConfig::new(5, 1, 8)
    });
    let r = &c.records[0];
    let json = serde_json::to_string(r).unwrap();
    let back: TrackRecord = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, r);
}

fn split_rows(n: usize) -> (Vec<usize>, Vec<usize>) {
    ((0..n * 4 / 5).collect(), (n * 4 / 5..n).collect())
}

#[test]
fn metadata_carries_more_linear_signal_than_low_level_audio() {
    let corpus = synth_dataset(&SynthConfig::new(5000, 12, 0));
    let y: Vec<f64> = corpus.records.iter().map(|r| r.popularity_raw as f64 / 100.0).collect();
    let (train, test) = split_rows(5000);
    let mae = |f: &dyn Fn(&TrackRecord) -> Vec<f64>| {
        let x: Vec<Vec<f64>> = corpus.records.iter().map(f).collect();
        let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
            (
                idx.iter().map(|&i| x[i].clone()).collect(),
                idx.iter().map(|&i| y[i]).collect(),
            )
        };
        let (trx, try_) = pick(&train);
        let (tex, tey) = pick(&test);
        oracle::least_squares_mae(&trx, &try_, &tex, &tey)
    };
    let meta = mae(&|r| r.metadata.iter().map(|&v| v as f64).collect());
    let ll = mae(&|r| r.ll_audio.iter().map(|&v| v as f64).collect());
    assert!(meta < ll, "metadata {meta} vs low-level audio {ll}");
}

#[test]
fn zero_signal_is_pure_noise() {
    let cfg = SynthConfig {
        signal: PlantedSignal::ZERO,
        ..SynthConfig::new(4000, 3, 0)
    };
    let corpus = synth_dataset(&cfg);
    let y: Vec<f64> = corpus.records.iter().map(|r| r.popularity_raw as f64 / 100.0).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mae = y.iter().map(|v| (v - mean).abs()).sum::<f64>() / y.len() as f64;
    // |N(0, s)| has mean s sqrt(2 / pi); rounding to whole points adds a little
    let expected = 0.05 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((mae - expected).abs() < 0.003, "{mae} vs {expected}");
}

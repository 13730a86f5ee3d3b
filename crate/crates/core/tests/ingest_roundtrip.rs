use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viewagg::ingest::{
    parse_predictions, parse_study_predictions, write_predictions_to, write_study_predictions_to,
};
use viewagg::{group_by_study, PredictionRecord, PredictionSet, StudyPrediction, ViewKind};

fn score() -> impl Strategy<Value = f64> {
    prop_oneof![
        0.0f64..=1.0,
        Just(0.0),
        Just(1.0),
        1e-300f64..1e-3,
        Just(f64::MIN_POSITIVE)
    ]
}

fn prediction_set() -> impl Strategy<Value = PredictionSet> {
    (1usize..5, 0usize..30).prop_flat_map(|(k, n)| {
        prop::collection::vec((0u8..6, any::<bool>(), prop::collection::vec(score(), k)), n).prop_map(
            move |rows| {
                let records = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (s, lateral, scores))| PredictionRecord {
                        image_id: format!("img,{i}"),
                        study_id: format!("study \"{s}\""),
                        view: if lateral {
                            ViewKind::Lateral
                        } else {
                            ViewKind::Frontal
                        },
                        scores,
                    })
                    .collect();
                PredictionSet::new((0..k).map(|c| format!("C{c}")).collect(), records).unwrap()
            },
        )
    })
}

proptest! {
    #[test]
    fn prediction_table_round_trips(set in prediction_set()) {
        let mut buf = Vec::new();
        write_predictions_to(&mut buf, &set).unwrap();
        let back = parse_predictions(buf.as_slice()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn study_table_round_trips_bit_exact(rows in prop::collection::vec(prop::collection::vec(score(), 3), 0..20)) {
        let classes: Vec<String> = vec!["A".into(), "B".into(), "C".into()];
        let preds: Vec<StudyPrediction> = rows
            .into_iter()
            .enumerate()
            .map(|(i, scores)| StudyPrediction { study_id: format!("s{i}"), scores })
            .collect();
        let mut buf = Vec::new();
        write_study_predictions_to(&mut buf, &classes, &preds).unwrap();
        let (back_classes, back) = parse_study_predictions(buf.as_slice()).unwrap();
        prop_assert_eq!(back_classes, classes);
        prop_assert_eq!(back.len(), preds.len());
        for (a, b) in back.iter().zip(&preds) {
            prop_assert_eq!(&a.study_id, &b.study_id);
            let bits_a: Vec<u64> = a.scores.iter().map(|s| s.to_bits()).collect();
            let bits_b: Vec<u64> = b.scores.iter().map(|s| s.to_bits()).collect();
            prop_assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn grouping_partitions_records(set in prediction_set(), seed in any::<u64>()) {
        let groups = group_by_study(set.records());
        let total: usize = groups.iter().map(|g| g.n_frontal() + g.n_lateral()).sum();
        prop_assert_eq!(total, set.len());
        prop_assert!(groups.windows(2).all(|w| w[0].study_id < w[1].study_id));
        for g in &groups {
            prop_assert!(g.all_records().all(|r| r.study_id == g.study_id));
            prop_assert!(g.frontal.iter().all(|r| r.view == ViewKind::Frontal));
            prop_assert!(g.lateral.iter().all(|r| r.view == ViewKind::Lateral));
        }

        let pairs = |records: &[PredictionRecord]| -> BTreeSet<(String, String)> {
            group_by_study(records)
                .iter()
                .flat_map(|g| g.all_records().map(|r| (g.study_id.to_owned(), r.image_id.clone())))
                .collect()
        };
        let mut shuffled = set.records().to_vec();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(pairs(set.records()), pairs(&shuffled));
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("study.csv");
    let classes = vec!["A".to_string(), "B".to_string()];
    let rows = vec![StudyPrediction {
        study_id: "s1".into(),
        scores: vec![0.1 + 0.2, 1.0 / 3.0],
    }];
    viewagg::write_study_predictions(&path, &classes, &rows).unwrap();
    let (c, back) = viewagg::read_study_predictions(&path).unwrap();
    assert_eq!(c, classes);
    assert_eq!(back, rows);
}

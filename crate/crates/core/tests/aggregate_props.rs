//! Invariants of the view aggregation and ensembling formulas.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use viewagg::{
    aggregate_study, ensemble, group_by_study, view_mean, AggregationConfig, EnsembleConfig,
    MissingViewPolicy, PredictionRecord, PredictionSet, ViewKind,
};

fn study(k: usize, max_per_view: usize) -> impl Strategy<Value = Vec<PredictionRecord>> {
    (0..=max_per_view, 0..=max_per_view)
        .prop_filter("at least one image", |(f, l)| f + l > 0)
        .prop_flat_map(move |(nf, nl)| {
            prop::collection::vec(prop::collection::vec(0.0f64..=1.0, k), nf + nl).prop_map(move |rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(i, scores)| PredictionRecord {
                        image_id: format!("i{i}"),
                        study_id: "s".into(),
                        view: if i < nf {
                            ViewKind::Frontal
                        } else {
                            ViewKind::Lateral
                        },
                        scores,
                    })
                    .collect()
            })
        })
}

fn cfg(w_f: f64, w_l: f64) -> AggregationConfig {
    AggregationConfig::new(w_f, w_l, MissingViewPolicy::UsePresentView).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn weight_scale_invariance(records in study(3, 4), w_f in 0.01f64..10.0, w_l in 0.01f64..10.0, c in 1e-3f64..1e3) {
        let groups = group_by_study(&records);
        let a = aggregate_study(&groups[0], &cfg(w_f, w_l)).unwrap();
        let b = aggregate_study(&groups[0], &cfg(c * w_f, c * w_l)).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn zero_lateral_weight_is_frontal_mean(records in study(3, 4), w_f in 0.01f64..10.0) {
        let groups = group_by_study(&records);
        let g = &groups[0];
        prop_assume!(g.n_frontal() > 0);
        let out = aggregate_study(g, &cfg(w_f, 0.0)).unwrap();
        prop_assert_eq!(out.scores, view_mean(g.frontal.iter().copied()).unwrap());
    }

    #[test]
    fn output_within_input_range(records in study(4, 4), w_f in 0.0f64..10.0, w_l in 0.01f64..10.0) {
        let groups = group_by_study(&records);
        let out = aggregate_study(&groups[0], &cfg(w_f, w_l)).unwrap();
        for (c, &v) in out.scores.iter().enumerate() {
            let lo = records.iter().map(|r| r.scores[c]).fold(f64::INFINITY, f64::min);
            let hi = records.iter().map(|r| r.scores[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= v && v <= hi, "{} not in [{}, {}]", v, lo, hi);
        }
    }

    #[test]
    fn view_mean_ignores_order(records in study(3, 8), seed in any::<u64>()) {
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(view_mean(&records).unwrap(), view_mean(&shuffled).unwrap());
    }

    #[test]
    fn ensembling_identical_members_is_identity(records in study(3, 3), w in prop::collection::vec(0.1f64..5.0, 1..4)) {
        let set = PredictionSet::new(vec!["a".into(), "b".into(), "c".into()], records).unwrap();
        let members = vec![set.clone(); w.len()];
        prop_assert_eq!(ensemble(&members, &EnsembleConfig::new(w).unwrap()).unwrap(), set);
    }
}

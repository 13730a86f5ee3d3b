//! Per-class average precision and macro-averaged mAP.
//!
//! AP is the non-interpolated area under the precision-recall curve. The
//! curve is sampled only at distinct score thresholds: every item whose score
//! is at least the threshold counts as predicted positive, so tied items enter
//! together and the result does not depend on input order.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use crate::aggregate::{column_permutation, StudyPrediction};
use crate::error::{Error, Result};
use crate::model::{ClassAp, ClassResult, EvalReport, LabelTable};

/// Average precision for one class. `Excluded` when there are no positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<ClassAp> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    let mut pairs: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
    Ok(ap_sorted(&mut pairs))
}

fn ap_sorted(pairs: &mut [(f64, bool)]) -> ClassAp {
    let n_pos = pairs.iter().filter(|(_, y)| *y).count();
    if n_pos == 0 {
        return ClassAp::Excluded;
    }
    // -0.0 and 0.0 are the same threshold
    for p in pairs.iter_mut() {
        p.0 += 0.0;
    }
    pairs.sort_unstable_by(|a, b| b.0.total_cmp(&a.0));

    // Sum precision * (positives gained) over tie groups and divide by n_pos
    // once at the end; with perfect precision this yields exactly 1.
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut acc = 0.0f64;
    let mut i = 0;
    while i < pairs.len() {
        let threshold = pairs[i].0;
        let mut gained = 0usize;
        while i < pairs.len() && pairs[i].0.total_cmp(&threshold) == Ordering::Equal {
            if pairs[i].1 {
                gained += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        if gained > 0 {
            tp += gained;
            acc += (tp as f64 / (tp + fp) as f64) * gained as f64;
        }
    }
    ClassAp::Included(acc / n_pos as f64)
}

/// Mean of the included APs and how many there were.
pub fn macro_map(per_class: &[ClassAp]) -> Result<(f64, usize)> {
    let included: Vec<f64> = per_class.iter().filter_map(|ap| ap.value()).collect();
    if included.is_empty() {
        return Err(Error::AllClassesExcluded);
    }
    Ok((
        included.iter().sum::<f64>() / included.len() as f64,
        included.len(),
    ))
}

/// Scores a study-level prediction table against ground truth.
///
/// `pred_classes` names the columns of `predictions`; it must be the same
/// class set as the label table, in any order. Classes are reported in label
/// table order, restricted to `class_subset` when given. Every labelled study
/// needs a prediction and every prediction needs a label row.
pub fn evaluate(
    pred_classes: &[String],
    predictions: &[StudyPrediction],
    labels: &LabelTable,
    class_subset: Option<&[String]>,
) -> Result<EvalReport> {
    let perm = column_permutation(labels.class_names(), pred_classes)?;

    let selected: Vec<usize> = match class_subset {
        None => (0..labels.num_classes()).collect(),
        Some(subset) => {
            let index: HashMap<&str, usize> = labels
                .class_names()
                .iter()
                .enumerate()
                .map(|(i, n)| (n.as_str(), i))
                .collect();
            let mut wanted = HashSet::with_capacity(subset.len());
            for name in subset {
                let i = *index
                    .get(name.as_str())
                    .ok_or_else(|| Error::UnknownClassInSubset(name.clone()))?;
                wanted.insert(i);
            }
            (0..labels.num_classes()).filter(|i| wanted.contains(i)).collect()
        }
    };

    let mut by_study: HashMap<&str, &StudyPrediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if p.scores.len() != pred_classes.len() {
            return Err(Error::ClassCountMismatch {
                image_id: p.study_id.clone(),
                expected: pred_classes.len(),
                found: p.scores.len(),
            });
        }
        if !labels.contains(&p.study_id) {
            return Err(Error::UnknownStudy(p.study_id.clone()));
        }
        if by_study.insert(p.study_id.as_str(), p).is_some() {
            return Err(Error::DuplicateStudyId(p.study_id.clone()));
        }
    }
    let missing: Vec<String> = labels
        .study_ids()
        .iter()
        .filter(|id| !by_study.contains_key(id.as_str()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingPrediction(missing));
    }

    // rows aligned to label order
    let rows: Vec<(&[f64], &[bool])> = labels
        .iter()
        .map(|(id, y)| (by_study[id].scores.as_slice(), y))
        .collect();

    let per_class: Vec<ClassResult> = selected
        .par_iter()
        .map(|&c| {
            let pc = perm[c];
            let mut pairs: Vec<(f64, bool)> = rows.iter().map(|(s, y)| (s[pc], y[c])).collect();
            let n_pos = pairs.iter().filter(|(_, y)| *y).count();
            ClassResult {
                name: labels.class_names()[c].clone(),
                ap: ap_sorted(&mut pairs),
                n_pos,
                n_neg: pairs.len() - n_pos,
            }
        })
        .collect();

    let aps: Vec<ClassAp> = per_class.iter().map(|r| r.ap).collect();
    let (macro_map, n_included) = macro_map(&aps)?;
    Ok(EvalReport {
        per_class,
        macro_map,
        n_included,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap(scores: &[f64], labels: &[u8]) -> ClassAp {
        let labels: Vec<bool> = labels.iter().map(|&y| y == 1).collect();
        average_precision(scores, &labels).unwrap()
    }

    #[test]
    fn interleaved_ranking() {
        let v = ap(&[0.9, 0.8, 0.7, 0.6], &[1, 0, 1, 0]).value().unwrap();
        assert!((v - 0.833_333_333_333_333_4).abs() < 1e-12);
    }

    #[test]
    fn all_positive_is_one() {
        assert_eq!(ap(&[0.1, 0.5, 0.3], &[1, 1, 1]), ClassAp::Included(1.0));
    }

    #[test]
    fn all_negative_is_excluded() {
        assert_eq!(ap(&[0.1, 0.5], &[0, 0]), ClassAp::Excluded);
        assert_eq!(ap(&[], &[]), ClassAp::Excluded);
    }

    #[test]
    fn single_tie_group() {
        assert_eq!(ap(&[0.5, 0.5], &[1, 0]), ClassAp::Included(0.5));
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(
            average_precision(&[0.1], &[true, false]),
            Err(Error::LengthMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn macro_examples() {
        let (m, n) = macro_map(&[ClassAp::Included(0.8), ClassAp::Included(0.6)]).unwrap();
        assert!((m - 0.7).abs() < 1e-15);
        assert_eq!(n, 2);
        let (m, n) = macro_map(&[ClassAp::Included(0.8), ClassAp::Excluded, ClassAp::Included(0.6)]).unwrap();
        assert!((m - 0.7).abs() < 1e-15);
        assert_eq!(n, 2);
        assert!(matches!(
            macro_map(&[ClassAp::Excluded, ClassAp::Excluded]),
            Err(Error::AllClassesExcluded)
        ));
    }

    fn table() -> (Vec<String>, Vec<StudyPrediction>, LabelTable) {
        let classes: Vec<String> = vec!["A".into(), "B".into()];
        let preds = vec![
            StudyPrediction {
                study_id: "s1".into(),
                scores: vec![0.9, 0.2],
            },
            StudyPrediction {
                study_id: "s2".into(),
                scores: vec![0.8, 0.7],
            },
            StudyPrediction {
                study_id: "s3".into(),
                scores: vec![0.7, 0.7],
            },
            StudyPrediction {
                study_id: "s4".into(),
                scores: vec![0.6, 0.1],
            },
        ];
        let labels = LabelTable::new(
            classes.clone(),
            vec![
                ("s1".into(), vec![true, false]),
                ("s2".into(), vec![false, true]),
                ("s3".into(), vec![true, false]),
                ("s4".into(), vec![false, false]),
            ],
        )
        .unwrap();
        (classes, preds, labels)
    }

    #[test]
    fn evaluate_matches_column_wise_ap() {
        let (classes, preds, labels) = table();
        let report = evaluate(&classes, &preds, &labels, None).unwrap();
        assert_eq!(report.per_class.len(), 2);
        // A: ranking 1,0,1,0 -> (1 + 2/3)/2. B: tie group {s2,s3} at 0.7 holds
        // the single positive -> precision 1/2.
        let a = report.per_class[0].ap.value().unwrap();
        let b = report.per_class[1].ap.value().unwrap();
        assert!((a - 5.0 / 6.0).abs() < 1e-12);
        assert!((b - 0.5).abs() < 1e-12);
        assert!((report.macro_map - (a + b) / 2.0).abs() < 1e-12);
        assert_eq!((report.per_class[0].n_pos, report.per_class[0].n_neg), (2, 2));
        assert_eq!((report.per_class[1].n_pos, report.per_class[1].n_neg), (1, 3));
    }

    #[test]
    fn evaluate_subset_and_reordered_columns() {
        let (_, preds, labels) = table();
        let swapped: Vec<StudyPrediction> = preds
            .iter()
            .map(|p| StudyPrediction {
                study_id: p.study_id.clone(),
                scores: vec![p.scores[1], p.scores[0]],
            })
            .collect();
        let classes = vec!["B".to_string(), "A".to_string()];
        let subset = vec!["A".to_string()];
        let report = evaluate(&classes, &swapped, &labels, Some(&subset)).unwrap();
        assert_eq!(report.per_class.len(), 1);
        assert_eq!(report.per_class[0].name, "A");
        assert!((report.macro_map - 5.0 / 6.0).abs() < 1e-12);

        let bad = vec!["C".to_string()];
        assert!(matches!(
            evaluate(&classes, &swapped, &labels, Some(&bad)),
            Err(Error::UnknownClassInSubset(c)) if c == "C"
        ));
    }

    #[test]
    fn evaluate_missing_and_unknown_studies() {
        let (classes, mut preds, labels) = table();
        preds.remove(2);
        assert!(matches!(
            evaluate(&classes, &preds, &labels, None),
            Err(Error::MissingPrediction(ids)) if ids == ["s3"]
        ));
        preds.push(StudyPrediction {
            study_id: "s9".into(),
            scores: vec![0.1, 0.1],
        });
        assert!(matches!(
            evaluate(&classes, &preds, &labels, None),
            Err(Error::UnknownStudy(id)) if id == "s9"
        ));
    }

    #[test]
    fn evaluate_rejects_class_set_mismatch() {
        let (_, preds, labels) = table();
        let classes = vec!["A".to_string(), "Z".to_string()];
        assert!(matches!(
            evaluate(&classes, &preds, &labels, None),
            Err(Error::ClassSetMismatch(_))
        ));
    }
}

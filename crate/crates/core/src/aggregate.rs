//! Study-level aggregation and image-level ensembling.
//!
//! A study's prediction is built in two steps: the component-wise mean of
//! every image of one view, then a normalized weighted average of the two
//! view means,
//!
//! ```text
//! P_final = (w_f * P_f + w_l * P_l) / (w_f + w_l)
//! ```
//!
//! Means are accumulated in double-double precision and rounded once, so each
//! output is the correctly rounded value of the formula over its `f64`
//! inputs. Outputs are also clamped into the `[min, max]` of their inputs,
//! which every convex combination satisfies exactly.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    AggregationConfig, MissingViewPolicy, PredictionRecord, PredictionSet, StudyGroup, ViewKind,
};
use crate::numeric::{mean_dd, weighted_mean, Dd};

/// Final probability vector for one study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyPrediction {
    pub study_id: String,
    pub scores: Vec<f64>,
}

/// Component-wise mean over the records of one view.
///
/// Each component is summed in sorted order, so the result does not depend
/// on record order.
pub fn view_mean<'a, I>(records: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = &'a PredictionRecord>,
{
    Ok(view_mean_dd(records)?.into_iter().map(|m| m.rounded()).collect())
}

/// A view mean kept at extended precision, with the range of its inputs.
#[derive(Debug, Clone, Copy)]
struct ViewMean {
    mean: Dd,
    lo: f64,
    hi: f64,
}

impl ViewMean {
    fn exact(x: f64) -> Self {
        ViewMean {
            mean: Dd::from_f64(x),
            lo: x,
            hi: x,
        }
    }

    fn rounded(self) -> f64 {
        self.mean.to_f64().clamp(self.lo, self.hi)
    }
}

fn view_mean_dd<'a, I>(records: I) -> Result<Vec<ViewMean>>
where
    I: IntoIterator<Item = &'a PredictionRecord>,
{
    let records: Vec<&PredictionRecord> = records.into_iter().collect();
    let first = records.first().ok_or(Error::EmptyView)?;
    let k = first.scores.len();
    if let Some(bad) = records.iter().find(|r| r.scores.len() != k) {
        return Err(Error::ClassCountMismatch {
            image_id: bad.image_id.clone(),
            expected: k,
            found: bad.scores.len(),
        });
    }

    let mut column = Vec::with_capacity(records.len());
    let means = (0..k)
        .map(|c| {
            column.clear();
            column.extend(records.iter().map(|r| r.scores[c]));
            column.sort_unstable_by(f64::total_cmp);
            ViewMean {
                mean: mean_dd(&column),
                lo: column[0],
                hi: column[column.len() - 1],
            }
        })
        .collect();
    Ok(means)
}

/// Weighted combination of the two view means, honoring the missing-view
/// policy when one side is absent.
pub fn combine_views(
    p_f: Option<&[f64]>,
    p_l: Option<&[f64]>,
    config: &AggregationConfig,
) -> Result<Vec<f64>> {
    let lift = |v: &[f64]| v.iter().map(|&x| ViewMean::exact(x)).collect::<Vec<_>>();
    combine_dd(p_f.map(lift).as_deref(), p_l.map(lift).as_deref(), config)
}

fn combine_dd(
    p_f: Option<&[ViewMean]>,
    p_l: Option<&[ViewMean]>,
    config: &AggregationConfig,
) -> Result<Vec<f64>> {
    let round_all = |v: &[ViewMean]| v.iter().map(|m| m.rounded()).collect();
    match (p_f, p_l) {
        (Some(f), Some(l)) => {
            if f.len() != l.len() {
                return Err(Error::LengthMismatch {
                    left: f.len(),
                    right: l.len(),
                });
            }
            // a zero-weight view contributes nothing
            if config.w_l() == 0.0 {
                return Ok(round_all(f));
            }
            if config.w_f() == 0.0 {
                return Ok(round_all(l));
            }
            Ok(f.iter()
                .zip(l)
                .map(|(x, y)| {
                    let v = weighted_mean([(config.w_f(), x.mean), (config.w_l(), y.mean)]);
                    let (a, b) = (x.rounded(), y.rounded());
                    v.clamp(a.min(b), a.max(b))
                })
                .collect())
        }
        (Some(present), None) | (None, Some(present)) => match config.missing_view_policy {
            MissingViewPolicy::UsePresentView => Ok(round_all(present)),
            MissingViewPolicy::Error => Err(Error::MissingView {
                view: if p_f.is_none() {
                    ViewKind::Frontal
                } else {
                    ViewKind::Lateral
                },
            }),
        },
        (None, None) => Err(Error::BothAbsent),
    }
}

fn in_study<T>(study_id: &str, result: Result<T>) -> Result<T> {
    result.map_err(|source| Error::Study {
        study_id: study_id.to_owned(),
        source: Box::new(source),
    })
}

/// Per-view means followed by the weighted cross-view combination.
pub fn aggregate_study(group: &StudyGroup<'_>, config: &AggregationConfig) -> Result<StudyPrediction> {
    let run = || {
        let p_f = match group.frontal.is_empty() {
            true => None,
            false => Some(view_mean_dd(group.frontal.iter().copied())?),
        };
        let p_l = match group.lateral.is_empty() {
            true => None,
            false => Some(view_mean_dd(group.lateral.iter().copied())?),
        };
        combine_dd(p_f.as_deref(), p_l.as_deref(), config)
    };
    Ok(StudyPrediction {
        study_id: group.study_id.to_owned(),
        scores: in_study(group.study_id, run())?,
    })
}

/// Plain mean over every image of the study, ignoring view.
pub fn aggregate_study_pooled(group: &StudyGroup<'_>) -> Result<StudyPrediction> {
    Ok(StudyPrediction {
        study_id: group.study_id.to_owned(),
        scores: in_study(group.study_id, view_mean(group.all_records()))?,
    })
}

fn first_error<T: Send>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Aggregates every group, in parallel. Output order follows input order and
/// the reported error is the one for the earliest failing group.
pub fn aggregate_all(groups: &[StudyGroup<'_>], config: &AggregationConfig) -> Result<Vec<StudyPrediction>> {
    first_error(groups.par_iter().map(|g| aggregate_study(g, config)).collect())
}

/// [`aggregate_all`] without view weighting.
pub fn aggregate_all_pooled(groups: &[StudyGroup<'_>]) -> Result<Vec<StudyPrediction>> {
    first_error(groups.par_iter().map(aggregate_study_pooled).collect())
}

/// Positive per-member weights for [`ensemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    member_weights: Vec<f64>,
}

impl EnsembleConfig {
    pub fn new(member_weights: Vec<f64>) -> Result<Self> {
        if member_weights.is_empty() {
            return Err(Error::InvalidWeights(
                "ensemble needs at least one member weight".into(),
            ));
        }
        if let Some(w) = member_weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "ensemble weights must be finite and positive, got {w}"
            )));
        }
        Ok(EnsembleConfig { member_weights })
    }

    pub fn equal(members: usize) -> Result<Self> {
        Self::new(vec![1.0; members])
    }

    pub fn member_weights(&self) -> &[f64] {
        &self.member_weights
    }
}

/// For each class of `target`, the column index of the same class in `source`.
pub(crate) fn column_permutation(target: &[String], source: &[String]) -> Result<Vec<usize>> {
    let index: HashMap<&str, usize> = source.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let missing: Vec<&str> = target
        .iter()
        .filter(|n| !index.contains_key(n.as_str()))
        .map(String::as_str)
        .collect();
    let extra: Vec<&str> = {
        let target_set: std::collections::HashSet<&str> = target.iter().map(String::as_str).collect();
        source
            .iter()
            .map(String::as_str)
            .filter(|n| !target_set.contains(n))
            .collect()
    };
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::ClassSetMismatch(format!(
            "missing {missing:?}, unexpected {extra:?}"
        )));
    }
    Ok(target.iter().map(|n| index[n.as_str()]).collect())
}

/// Image-level weighted mean of several models' predictions.
///
/// Every member must cover the same image ids with the same study and view.
/// Members may order their class columns differently; output uses the first
/// member's class and row order.
pub fn ensemble(sets: &[PredictionSet], config: &EnsembleConfig) -> Result<PredictionSet> {
    let weights = config.member_weights();
    let first = sets
        .first()
        .ok_or_else(|| Error::InvalidWeights("ensemble needs at least one prediction set".into()))?;
    if weights.len() != sets.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} prediction sets",
            weights.len(),
            sets.len()
        )));
    }

    // row lookup and column permutation for every member after the first
    let mut aligned: Vec<(Vec<usize>, Vec<usize>)> = Vec::with_capacity(sets.len() - 1);
    for (m, set) in sets.iter().enumerate().skip(1) {
        let perm = column_permutation(first.class_names(), set.class_names())?;
        let index: HashMap<&str, usize> = set
            .records()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.image_id.as_str(), i))
            .collect();
        let mut rows = Vec::with_capacity(first.len());
        for rec in first.records() {
            let i = *index
                .get(rec.image_id.as_str())
                .ok_or_else(|| Error::ImageSetMismatch {
                    image_id: rec.image_id.clone(),
                    member: m,
                })?;
            let other = &set.records()[i];
            if other.study_id != rec.study_id || other.view != rec.view {
                return Err(Error::MetadataConflict {
                    image_id: rec.image_id.clone(),
                    member: m,
                });
            }
            rows.push(i);
        }
        if set.len() != first.len() {
            let known: std::collections::HashSet<&str> =
                first.records().iter().map(|r| r.image_id.as_str()).collect();
            let extra = set
                .records()
                .iter()
                .find(|r| !known.contains(r.image_id.as_str()))
                .map(|r| r.image_id.clone())
                .unwrap_or_default();
            return Err(Error::ImageSetMismatch {
                image_id: extra,
                member: m,
            });
        }
        aligned.push((perm, rows));
    }

    let records: Vec<PredictionRecord> = first
        .records()
        .par_iter()
        .enumerate()
        .map(|(row, rec)| {
            let scores = (0..first.num_classes())
                .map(|c| {
                    let member_scores = std::iter::once(rec.scores[c]).chain(
                        aligned
                            .iter()
                            .enumerate()
                            .map(|(m, (perm, rows))| sets[m + 1].records()[rows[row]].scores[perm[c]]),
                    );
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    let terms = member_scores.zip(weights).map(|(s, &w)| {
                        lo = lo.min(s);
                        hi = hi.max(s);
                        (w, Dd::from_f64(s))
                    });
                    let v = weighted_mean(terms);
                    v.clamp(lo, hi)
                })
                .collect();
            PredictionRecord {
                image_id: rec.image_id.clone(),
                study_id: rec.study_id.clone(),
                view: rec.view,
                scores,
            }
        })
        .collect();
    PredictionSet::new(first.class_names().to_vec(), records)
}

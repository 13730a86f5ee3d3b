//! Domain types shared by the ingest, aggregation and evaluation stages.
//!
//! Everything here is immutable once constructed through its validating
//! constructor, so values can be shared freely across worker threads.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Projection of a single image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewKind {
    Frontal,
    Lateral,
}

impl ViewKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ViewKind::Frontal => "frontal",
            ViewKind::Lateral => "lateral",
        }
    }
}

impl fmt::Display for ViewKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseViewError(pub String);

impl fmt::Display for ParseViewError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown view {:?} (expected frontal or lateral)", self.0)
    }
}

impl std::error::Error for ParseViewError {}

impl FromStr for ViewKind {
    type Err = ParseViewError;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("frontal") {
            Ok(ViewKind::Frontal)
        } else if s.eq_ignore_ascii_case("lateral") {
            Ok(ViewKind::Lateral)
        } else {
            Err(ParseViewError(s.to_owned()))
        }
    }
}

/// One image's class probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub image_id: String,
    pub study_id: String,
    pub view: ViewKind,
    pub scores: Vec<f64>,
}

/// Checks score range, score count and image_id uniqueness, reporting the
/// first violating record in input order.
pub fn validate_prediction_set(records: &[PredictionRecord], expected_k: usize) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for record in records {
        if record.scores.len() != expected_k {
            return Err(Error::ClassCountMismatch {
                image_id: record.image_id.clone(),
                expected: expected_k,
                found: record.scores.len(),
            });
        }
        if let Some((class, &value)) = record
            .scores
            .iter()
            .enumerate()
            .find(|(_, s)| !(0.0..=1.0).contains(*s))
        {
            return Err(Error::ScoreOutOfRange {
                image_id: record.image_id.clone(),
                class,
                value,
            });
        }
        if !seen.insert(record.image_id.as_str()) {
            return Err(Error::DuplicateImageId(record.image_id.clone()));
        }
    }
    Ok(())
}

pub(crate) fn check_class_names(names: &[String]) -> Result<()> {
    if names.is_empty() {
        return Err(Error::InvalidClassNames("no class columns".into()));
    }
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if name.is_empty() {
            return Err(Error::InvalidClassNames("empty class name".into()));
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::InvalidClassNames(format!("duplicate class {name:?}")));
        }
    }
    Ok(())
}

/// A validated set of image-level predictions over a fixed class list.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionSet {
    class_names: Vec<String>,
    records: Vec<PredictionRecord>,
}

impl PredictionSet {
    pub fn new(class_names: Vec<String>, records: Vec<PredictionRecord>) -> Result<Self> {
        check_class_names(&class_names)?;
        validate_prediction_set(&records, class_names.len())?;
        Ok(PredictionSet { class_names, records })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn into_parts(self) -> (Vec<String>, Vec<PredictionRecord>) {
        (self.class_names, self.records)
    }
}

/// All records of one study, split by view. Borrows from the prediction set.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyGroup<'a> {
    pub study_id: &'a str,
    pub frontal: Vec<&'a PredictionRecord>,
    pub lateral: Vec<&'a PredictionRecord>,
}

impl<'a> StudyGroup<'a> {
    pub fn n_frontal(&self) -> usize {
        self.frontal.len()
    }

    pub fn n_lateral(&self) -> usize {
        self.lateral.len()
    }

    pub fn len(&self) -> usize {
        self.frontal.len() + self.lateral.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Frontal records followed by lateral records.
    pub fn all_records(&self) -> impl Iterator<Item = &'a PredictionRecord> + '_ {
        self.frontal.iter().chain(self.lateral.iter()).copied()
    }
}

/// Ground-truth binary labels keyed by study.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelTable {
    class_names: Vec<String>,
    study_ids: Vec<String>,
    rows: Vec<Vec<bool>>,
    index: HashMap<String, usize>,
}

impl LabelTable {
    /// Builds a table from rows in file order. Rejects duplicate study ids and
    /// rows whose width differs from the class list.
    pub fn new(class_names: Vec<String>, rows: Vec<(String, Vec<bool>)>) -> Result<Self> {
        check_class_names(&class_names)?;
        let k = class_names.len();
        let mut index = HashMap::with_capacity(rows.len());
        let mut study_ids = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for (study_id, row) in rows {
            if row.len() != k {
                return Err(Error::LengthMismatch {
                    left: k,
                    right: row.len(),
                });
            }
            if index.insert(study_id.clone(), study_ids.len()).is_some() {
                return Err(Error::DuplicateStudyId(study_id));
            }
            study_ids.push(study_id);
            labels.push(row);
        }
        Ok(LabelTable {
            class_names,
            study_ids,
            rows: labels,
            index,
        })
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Study ids in file order.
    pub fn study_ids(&self) -> &[String] {
        &self.study_ids
    }

    pub fn len(&self) -> usize {
        self.study_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.study_ids.is_empty()
    }

    pub fn get(&self, study_id: &str) -> Option<&[bool]> {
        self.index.get(study_id).map(|&i| self.rows[i].as_slice())
    }

    pub fn contains(&self, study_id: &str) -> bool {
        self.index.contains_key(study_id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[bool])> {
        self.study_ids
            .iter()
            .zip(&self.rows)
            .map(|(id, row)| (id.as_str(), row.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MissingViewPolicy {
    /// A study with only one view keeps that view's mean unchanged.
    #[default]
    UsePresentView,
    Error,
}

/// Frontal/lateral weights for the cross-view combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationConfig {
    w_f: f64,
    w_l: f64,
    pub missing_view_policy: MissingViewPolicy,
}

impl AggregationConfig {
    pub fn new(w_f: f64, w_l: f64, missing_view_policy: MissingViewPolicy) -> Result<Self> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !ok(w_f) || !ok(w_l) || w_f + w_l <= 0.0 {
            return Err(Error::InvalidWeights(format!(
                "view weights must be finite, non-negative and not both zero (got {w_f}, {w_l})"
            )));
        }
        Ok(AggregationConfig {
            w_f,
            w_l,
            missing_view_policy,
        })
    }

    pub fn w_f(&self) -> f64 {
        self.w_f
    }

    pub fn w_l(&self) -> f64 {
        self.w_l
    }
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            w_f: 1.0,
            w_l: 1.0,
            missing_view_policy: MissingViewPolicy::default(),
        }
    }
}

/// Average precision of one class, or `Excluded` when it has no positives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassAp {
    Included(f64),
    Excluded,
}

impl ClassAp {
    pub fn value(self) -> Option<f64> {
        match self {
            ClassAp::Included(ap) => Some(ap),
            ClassAp::Excluded => None,
        }
    }

    pub fn is_excluded(self) -> bool {
        matches!(self, ClassAp::Excluded)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassResult {
    pub name: String,
    pub ap: ClassAp,
    pub n_pos: usize,
    pub n_neg: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_class: Vec<ClassResult>,
    pub macro_map: f64,
    pub n_included: usize,
}

use std::fmt;
use std::io;

use thiserror::Error;

use crate::model::ViewKind;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("record {image_id:?}: score {value} for class {class} is outside [0, 1]")]
    ScoreOutOfRange {
        image_id: String,
        class: usize,
        value: f64,
    },

    #[error("duplicate image_id {0:?}")]
    DuplicateImageId(String),

    #[error("record {image_id:?}: expected {expected} scores, found {found}")]
    ClassCountMismatch {
        image_id: String,
        expected: usize,
        found: usize,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("line {line}: expected {expected} columns, found {found}")]
    RowArity {
        line: u64,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column:?}: cannot parse score {value:?}")]
    UnparsableScore {
        line: u64,
        column: String,
        value: String,
    },

    #[error("line {line}: unknown view {value:?} (expected frontal or lateral)")]
    UnknownView { line: u64, value: String },

    #[error("line {line}, column {column:?}: label {value:?} is not 0 or 1")]
    NonBinaryLabel {
        line: u64,
        column: String,
        value: String,
    },

    #[error("duplicate study_id {0:?}")]
    DuplicateStudyId(String),

    #[error("invalid class names: {0}")]
    InvalidClassNames(String),

    #[error("view_mean called on an empty view")]
    EmptyView,

    #[error("{view} view is absent and the missing-view policy is `error`")]
    MissingView { view: ViewKind },

    #[error("both views are absent")]
    BothAbsent,

    #[error("study {study_id:?}: {source}")]
    Study {
        study_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("ensemble member {member}: image {image_id:?} is not present in every prediction set")]
    ImageSetMismatch { image_id: String, member: usize },

    #[error("ensemble member {member}: image {image_id:?} has conflicting study_id or view")]
    MetadataConflict { image_id: String, member: usize },

    #[error("class sets differ: {0}")]
    ClassSetMismatch(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("every class has zero positives; macro mAP is undefined")]
    AllClassesExcluded,

    #[error("no prediction for {} labelled stud{}: {}", .0.len(), if .0.len() == 1 { "y" } else { "ies" }, IdList(.0))]
    MissingPrediction(Vec<String>),

    #[error("prediction for study {0:?} has no ground-truth row")]
    UnknownStudy(String),

    #[error("class {0:?} in subset is not a known class")]
    UnknownClassInSubset(String),

    #[error("invalid PP ratio {0:?}: expected A:B with non-negative numbers, not both zero")]
    InvalidRatio(String),

    #[error("invalid synth config: {0}")]
    InvalidConfig(String),

    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] io::Error),
}

struct IdList<'a>(&'a [String]);

impl fmt::Display for IdList<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const SHOWN: usize = 10;
        for (i, id) in self.0.iter().take(SHOWN).enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str(id)?;
        }
        if self.0.len() > SHOWN {
            write!(f, ", ... and {} more", self.0.len() - SHOWN)?;
        }
        Ok(())
    }
}

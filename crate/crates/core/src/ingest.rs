//! CSV readers and writers for prediction, label and study-level tables,
//! plus grouping of image rows into studies.
//!
//! Formats:
//!
//! * predictions: `image_id,study_id,view,<class_1>,...,<class_K>`
//! * labels: `study_id,<class_1>,...,<class_K>` with 0/1 cells
//! * study-level predictions: `study_id,<class_1>,...,<class_K>`
//!
//! Scores are written with the shortest decimal representation that parses
//! back to the identical `f64`, so a write/read cycle is lossless.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Trim, WriterBuilder};

use crate::aggregate::StudyPrediction;
use crate::error::{Error, Result};
use crate::model::{check_class_names, LabelTable, PredictionRecord, PredictionSet, StudyGroup, ViewKind};

const PREDICTION_COLUMNS: [&str; 3] = ["image_id", "study_id", "view"];

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader)
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

/// Reads the header row and returns the class names following `fixed`.
fn read_header<R: Read>(rdr: &mut csv::Reader<R>, fixed: &[&str]) -> Result<Vec<String>> {
    let mut header = StringRecord::new();
    if !rdr.read_record(&mut header)? {
        return Err(Error::MalformedHeader("file is empty".into()));
    }
    if header.len() < fixed.len() {
        return Err(Error::MalformedHeader(format!(
            "expected leading columns {fixed:?}, found {} column(s)",
            header.len()
        )));
    }
    for (i, want) in fixed.iter().enumerate() {
        if &header[i] != *want {
            return Err(Error::MalformedHeader(format!(
                "column {} must be {want:?}, found {:?}",
                i + 1,
                &header[i]
            )));
        }
    }
    let classes: Vec<String> = header.iter().skip(fixed.len()).map(str::to_owned).collect();
    check_class_names(&classes).map_err(|e| Error::MalformedHeader(e.to_string()))?;
    Ok(classes)
}

fn parse_score(record: &StringRecord, idx: usize, class: &str) -> Result<f64> {
    let raw = &record[idx];
    raw.parse::<f64>().map_err(|_| Error::UnparsableScore {
        line: line_of(record),
        column: class.to_owned(),
        value: raw.to_owned(),
    })
}

fn check_arity(record: &StringRecord, expected: usize) -> Result<()> {
    if record.len() != expected {
        return Err(Error::RowArity {
            line: line_of(record),
            expected,
            found: record.len(),
        });
    }
    Ok(())
}

/// Parses an image-level prediction table. Row order is preserved and the
/// result is validated (score range, image_id uniqueness).
pub fn parse_predictions<R: Read>(reader: R) -> Result<PredictionSet> {
    let mut rdr = csv_reader(reader);
    let classes = read_header(&mut rdr, &PREDICTION_COLUMNS)?;
    let width = PREDICTION_COLUMNS.len() + classes.len();

    let mut records = Vec::new();
    let mut row = StringRecord::new();
    while rdr.read_record(&mut row)? {
        check_arity(&row, width)?;
        let view = row[2].parse::<ViewKind>().map_err(|e| Error::UnknownView {
            line: line_of(&row),
            value: e.0,
        })?;
        let scores = classes
            .iter()
            .enumerate()
            .map(|(c, name)| parse_score(&row, PREDICTION_COLUMNS.len() + c, name))
            .collect::<Result<Vec<f64>>>()?;
        records.push(PredictionRecord {
            image_id: row[0].to_owned(),
            study_id: row[1].to_owned(),
            view,
            scores,
        });
    }
    PredictionSet::new(classes, records)
}

pub fn read_predictions(path: impl AsRef<Path>) -> Result<PredictionSet> {
    parse_predictions(BufReader::new(File::open(path)?))
}

/// Parses a ground-truth table. Cells must be numerically 0 or 1.
pub fn parse_labels<R: Read>(reader: R) -> Result<LabelTable> {
    let mut rdr = csv_reader(reader);
    let classes = read_header(&mut rdr, &["study_id"])?;
    let width = 1 + classes.len();

    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    let mut row = StringRecord::new();
    while rdr.read_record(&mut row)? {
        check_arity(&row, width)?;
        let study_id = row[0].to_owned();
        if !seen.insert(study_id.clone()) {
            return Err(Error::DuplicateStudyId(study_id));
        }
        let labels = classes
            .iter()
            .enumerate()
            .map(|(c, name)| {
                let raw = &row[1 + c];
                match raw.parse::<f64>() {
                    Ok(1.0) => Ok(true),
                    Ok(0.0) => Ok(false),
                    _ => Err(Error::NonBinaryLabel {
                        line: line_of(&row),
                        column: name.clone(),
                        value: raw.to_owned(),
                    }),
                }
            })
            .collect::<Result<Vec<bool>>>()?;
        rows.push((study_id, labels));
    }
    LabelTable::new(classes, rows)
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelTable> {
    parse_labels(BufReader::new(File::open(path)?))
}

/// Parses a study-level prediction table as written by
/// [`write_study_predictions`]. Scores must lie in [0, 1] and study ids must
/// be unique.
pub fn parse_study_predictions<R: Read>(reader: R) -> Result<(Vec<String>, Vec<StudyPrediction>)> {
    let mut rdr = csv_reader(reader);
    let classes = read_header(&mut rdr, &["study_id"])?;
    let width = 1 + classes.len();

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    let mut row = StringRecord::new();
    while rdr.read_record(&mut row)? {
        check_arity(&row, width)?;
        let study_id = row[0].to_owned();
        if !seen.insert(study_id.clone()) {
            return Err(Error::DuplicateStudyId(study_id));
        }
        let scores = classes
            .iter()
            .enumerate()
            .map(|(c, name)| parse_score(&row, 1 + c, name))
            .collect::<Result<Vec<f64>>>()?;
        if let Some((class, &value)) = scores.iter().enumerate().find(|(_, s)| !(0.0..=1.0).contains(*s)) {
            return Err(Error::ScoreOutOfRange {
                image_id: study_id,
                class,
                value,
            });
        }
        out.push(StudyPrediction { study_id, scores });
    }
    Ok((classes, out))
}

pub fn read_study_predictions(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<StudyPrediction>)> {
    parse_study_predictions(BufReader::new(File::open(path)?))
}

/// Parses a class-subset list: one class name per line, blank lines and
/// lines starting with `#` ignored. Duplicates are rejected.
pub fn parse_class_subset(text: &str) -> Result<Vec<String>> {
    let mut names = Vec::new();
    let mut seen = HashSet::new();
    for line in text.lines() {
        let name = line.trim();
        if name.is_empty() || name.starts_with('#') {
            continue;
        }
        if !seen.insert(name) {
            return Err(Error::InvalidClassNames(format!(
                "duplicate class {name:?} in subset"
            )));
        }
        names.push(name.to_owned());
    }
    if names.is_empty() {
        return Err(Error::InvalidClassNames("class subset is empty".into()));
    }
    Ok(names)
}

pub fn read_class_subset(path: impl AsRef<Path>) -> Result<Vec<String>> {
    parse_class_subset(&std::fs::read_to_string(path)?)
}

/// Partitions records by study. Groups come out sorted by study_id (byte
/// order); records keep their input order within each view.
pub fn group_by_study(records: &[PredictionRecord]) -> Vec<StudyGroup<'_>> {
    let mut groups: BTreeMap<&str, StudyGroup<'_>> = BTreeMap::new();
    for record in records {
        let group = groups
            .entry(record.study_id.as_str())
            .or_insert_with(|| StudyGroup {
                study_id: record.study_id.as_str(),
                frontal: Vec::new(),
                lateral: Vec::new(),
            });
        match record.view {
            ViewKind::Frontal => group.frontal.push(record),
            ViewKind::Lateral => group.lateral.push(record),
        }
    }
    groups.into_values().collect()
}

fn format_score(s: f64) -> String {
    // `Display` for f64 emits the shortest string that round-trips exactly.
    s.to_string()
}

pub fn write_study_predictions_to<W: Write>(
    writer: W,
    class_names: &[String],
    rows: &[StudyPrediction],
) -> Result<()> {
    check_study_rows(class_names, rows)?;
    let mut wtr = WriterBuilder::new().from_writer(writer);
    wtr.write_record(std::iter::once("study_id").chain(class_names.iter().map(String::as_str)))?;
    let mut fields = Vec::with_capacity(class_names.len() + 1);
    for row in rows {
        fields.clear();
        fields.push(row.study_id.clone());
        fields.extend(row.scores.iter().map(|&s| format_score(s)));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

fn check_study_rows(class_names: &[String], rows: &[StudyPrediction]) -> Result<()> {
    check_class_names(class_names)?;
    for row in rows {
        if row.scores.len() != class_names.len() {
            return Err(Error::ClassCountMismatch {
                image_id: row.study_id.clone(),
                expected: class_names.len(),
                found: row.scores.len(),
            });
        }
    }
    Ok(())
}

/// Writes `study_id,<classes...>` rows in the given order. Row widths are
/// checked before the file is created.
pub fn write_study_predictions(
    path: impl AsRef<Path>,
    class_names: &[String],
    rows: &[StudyPrediction],
) -> Result<()> {
    check_study_rows(class_names, rows)?;
    let file = BufWriter::new(File::create(path)?);
    write_study_predictions_to(file, class_names, rows)
}

pub fn write_predictions_to<W: Write>(writer: W, set: &PredictionSet) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(writer);
    wtr.write_record(
        PREDICTION_COLUMNS
            .iter()
            .copied()
            .chain(set.class_names().iter().map(String::as_str)),
    )?;
    let mut fields = Vec::with_capacity(set.num_classes() + 3);
    for r in set.records() {
        fields.clear();
        fields.push(r.image_id.clone());
        fields.push(r.study_id.clone());
        fields.push(r.view.as_str().to_owned());
        fields.extend(r.scores.iter().map(|&s| format_score(s)));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_predictions(path: impl AsRef<Path>, set: &PredictionSet) -> Result<()> {
    write_predictions_to(BufWriter::new(File::create(path)?), set)
}

pub fn write_labels_to<W: Write>(writer: W, labels: &LabelTable) -> Result<()> {
    let mut wtr = WriterBuilder::new().from_writer(writer);
    wtr.write_record(std::iter::once("study_id").chain(labels.class_names().iter().map(String::as_str)))?;
    for (study_id, row) in labels.iter() {
        wtr.write_record(std::iter::once(study_id).chain(row.iter().map(|&b| if b { "1" } else { "0" })))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_labels(path: impl AsRef<Path>, labels: &LabelTable) -> Result<()> {
    write_labels_to(BufWriter::new(File::create(path)?), labels)
}

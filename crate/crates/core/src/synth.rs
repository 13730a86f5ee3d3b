//! Seeded generator for long-tailed, multi-view prediction and label tables.
//!
//! Each study gets per-class labels drawn from `Bernoulli(prevalence[k])`.
//! Every image then scores class `k` as
//!
//! ```text
//! sigmoid(signal * (2y - 1) + noise),  noise ~ N(0, sigma_view)
//! ```
//!
//! with an independent noise draw per image and class. Every study has at
//! least one frontal image; a second frontal and a lateral appear at random.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{LabelTable, PredictionRecord, PredictionSet, ViewKind};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_studies: usize,
    pub k_classes: usize,
    pub prevalence: Vec<f64>,
    pub frontal_noise: f64,
    pub lateral_noise: f64,
    pub p_has_lateral: f64,
    /// Probability of a second frontal image in a study.
    pub p_extra_frontal: f64,
    /// Logit offset separating positives from negatives.
    pub signal: f64,
    pub seed: u64,
}

/// `0.3 * 0.7^k` for `k` in `0..k_classes`.
pub fn geometric_prevalence(k_classes: usize) -> Vec<f64> {
    (0..k_classes).map(|k| 0.3 * 0.7f64.powi(k as i32)).collect()
}

impl SynthConfig {
    pub fn new(n_studies: usize, k_classes: usize, seed: u64) -> Self {
        SynthConfig {
            n_studies,
            k_classes,
            prevalence: geometric_prevalence(k_classes),
            frontal_noise: 1.5,
            lateral_noise: 3.0,
            p_has_lateral: 0.6,
            p_extra_frontal: 0.2,
            signal: 2.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.k_classes == 0 {
            return bad("k_classes must be at least 1".into());
        }
        if self.prevalence.len() != self.k_classes {
            return bad(format!(
                "{} prevalence values for {} classes",
                self.prevalence.len(),
                self.k_classes
            ));
        }
        if let Some(p) = self.prevalence.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
            return bad(format!("prevalence must be in (0, 1], got {p}"));
        }
        for (name, sigma) in [
            ("frontal_noise", self.frontal_noise),
            ("lateral_noise", self.lateral_noise),
        ] {
            if !(sigma.is_finite() && sigma >= 0.0) {
                return bad(format!("{name} must be finite and >= 0, got {sigma}"));
            }
        }
        for (name, p) in [
            ("p_has_lateral", self.p_has_lateral),
            ("p_extra_frontal", self.p_extra_frontal),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must be in [0, 1], got {p}"));
            }
        }
        if !self.signal.is_finite() {
            return bad(format!("signal must be finite, got {}", self.signal));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthData {
    pub predictions: PredictionSet,
    pub labels: LabelTable,
}

/// Several models scoring the same images against one label table.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthEnsemble {
    pub members: Vec<PredictionSet>,
    pub labels: LabelTable,
}

struct ImageSlot {
    image_id: String,
    study: usize,
    view: ViewKind,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn generate(config: &SynthConfig) -> Result<SynthData> {
    let mut out = generate_ensemble(config, 1)?;
    Ok(SynthData {
        predictions: out.members.pop().expect("one member"),
        labels: out.labels,
    })
}

/// Generates `n_models` prediction sets over identical images and labels.
/// Member `m` draws its noise from its own stream, so member 0 equals the
/// output of [`generate`] for the same config.
pub fn generate_ensemble(config: &SynthConfig, n_models: usize) -> Result<SynthEnsemble> {
    config.validate()?;
    if n_models == 0 {
        return Err(Error::InvalidConfig("n_models must be at least 1".into()));
    }

    let width = config.k_classes.saturating_sub(1).to_string().len().max(2);
    let class_names: Vec<String> = (0..config.k_classes)
        .map(|k| format!("class_{k:0width$}"))
        .collect();
    let id_width = config.n_studies.saturating_sub(1).to_string().len().max(6);

    let mut layout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut label_rows = Vec::with_capacity(config.n_studies);
    let mut slots = Vec::new();
    for s in 0..config.n_studies {
        let study_id = format!("s{s:0id_width$}");
        let labels: Vec<bool> = config
            .prevalence
            .iter()
            .map(|&p| layout_rng.random_bool(p))
            .collect();
        slots.push(ImageSlot {
            image_id: format!("{study_id}_f0"),
            study: s,
            view: ViewKind::Frontal,
        });
        if layout_rng.random_bool(config.p_extra_frontal) {
            slots.push(ImageSlot {
                image_id: format!("{study_id}_f1"),
                study: s,
                view: ViewKind::Frontal,
            });
        }
        if layout_rng.random_bool(config.p_has_lateral) {
            slots.push(ImageSlot {
                image_id: format!("{study_id}_l0"),
                study: s,
                view: ViewKind::Lateral,
            });
        }
        label_rows.push((study_id, labels));
    }

    let frontal = Normal::new(0.0, config.frontal_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let lateral = Normal::new(0.0, config.lateral_noise).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut members = Vec::with_capacity(n_models);
    for m in 0..n_models {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(m as u64 + 1);
        let records = slots
            .iter()
            .map(|slot| {
                let (study_id, labels) = &label_rows[slot.study];
                let noise = match slot.view {
                    ViewKind::Frontal => &frontal,
                    ViewKind::Lateral => &lateral,
                };
                let scores = labels
                    .iter()
                    .map(|&y| {
                        let centre = if y { config.signal } else { -config.signal };
                        sigmoid(centre + noise.sample(&mut rng))
                    })
                    .collect();
                PredictionRecord {
                    image_id: slot.image_id.clone(),
                    study_id: study_id.clone(),
                    view: slot.view,
                    scores,
                }
            })
            .collect();
        members.push(PredictionSet::new(class_names.clone(), records)?);
    }

    Ok(SynthEnsemble {
        members,
        labels: LabelTable::new(class_names, label_rows)?,
    })
}

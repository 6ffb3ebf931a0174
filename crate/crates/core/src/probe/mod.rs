//! Zero-shot color-label prediction over adapter embeddings.
//!
//! For each image the predicted label is the one whose prompt embedding has
//! the highest cosine similarity with the image embedding. The answer is then
//! categorized against the scene's ground truth and aggregated into tables.

mod tables;

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exchange::read_embeddings;
use crate::palette::{ColorTerm, Palette, TERM_COUNT};
use crate::stimulus::{DatasetKind, DatasetManifest, SceneSpec, StimulusRecord};

pub use tables::{
    aggregate_chromaticity, aggregate_stroop, CellCounts, ChromaticityTable, StroopCounts,
    StroopTable,
};

pub const RESULTS_FORMAT: &str = "colorprobe-results/1";
/// Norm deviation above which a loaded embedding triggers a warning.
pub const NORM_WARN_TOLERANCE: f64 = 1e-3;

/// Embedding file holding the per-image vectors inside an embeddings directory.
pub const IMAGE_EMBEDDINGS_FILE: &str = "images.bin";

/// Embedding file holding the 11 label prompts of one template.
pub fn text_embeddings_file(template_id: &str) -> String {
    format!("text-{template_id}.bin")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    BackgroundColor,
    ObjectOrFontColor,
    WrittenColor,
    NoneOfInput,
    Incorrect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: ColorTerm,
    pub scores: [f64; TERM_COUNT],
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine-similarity argmax over the 11 label embeddings (vocabulary order).
///
/// Exact ties go to the label that comes first in vocabulary order.
pub fn predict_label(image: &[f64], labels: &[Vec<f64>]) -> Result<Prediction> {
    if labels.len() != TERM_COUNT {
        return Err(Error::Probe(format!(
            "expected {TERM_COUNT} label embeddings, got {}",
            labels.len()
        )));
    }
    let image_norm = norm(image);
    if !(image_norm > 0.0) {
        return Err(Error::Probe("image embedding has zero norm".into()));
    }
    let mut scores = [0.0; TERM_COUNT];
    for (term, (t, score)) in ColorTerm::ALL.iter().zip(labels.iter().zip(&mut scores)) {
        if t.len() != image.len() {
            return Err(Error::Probe(format!(
                "dimension mismatch: image {} vs label {term} {}",
                image.len(),
                t.len()
            )));
        }
        let tn = norm(t);
        if !(tn > 0.0) {
            return Err(Error::Probe(format!(
                "label embedding {term} has zero norm"
            )));
        }
        let dot: f64 = image.iter().zip(t).map(|(a, b)| a * b).sum();
        *score = dot / (image_norm * tn);
    }
    let mut best = 0;
    for i in 1..TERM_COUNT {
        if scores[i] > scores[best] {
            best = i;
        }
    }
    Ok(Prediction {
        label: ColorTerm::ALL[best],
        scores,
    })
}

/// Which part of the scene (if any) the predicted label names.
pub fn categorize_outcome(predicted: ColorTerm, record: &StimulusRecord) -> Outcome {
    match &record.spec {
        SceneSpec::Shape(s) => {
            if predicted == s.background {
                Outcome::BackgroundColor
            } else if predicted == s.object_color {
                Outcome::ObjectOrFontColor
            } else {
                Outcome::Incorrect
            }
        }
        SceneSpec::Stroop(s) => {
            if predicted == s.background {
                Outcome::BackgroundColor
            } else if predicted == s.font_color {
                Outcome::ObjectOrFontColor
            } else if predicted == s.word {
                Outcome::WrittenColor
            } else {
                Outcome::NoneOfInput
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub record_id: String,
    pub template_id: String,
    pub scores: BTreeMap<ColorTerm, f64>,
    pub predicted: ColorTerm,
    pub outcome: Outcome,
}

/// Unit-normalized text and image embeddings for one template.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    dim: usize,
    labels: Vec<Vec<f64>>,
    images: HashMap<String, Vec<f64>>,
    warnings: Vec<String>,
    model: Option<String>,
}

fn normalized(key: &str, v: &[f32], dim: usize, warnings: &mut Vec<String>) -> Result<Vec<f64>> {
    if v.len() != dim {
        return Err(Error::Probe(format!(
            "{key}: dimension {} differs from {dim}",
            v.len()
        )));
    }
    let v: Vec<f64> = v.iter().map(|&x| x as f64).collect();
    let n = norm(&v);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Probe(format!(
            "{key}: embedding has zero or invalid norm"
        )));
    }
    if (n - 1.0).abs() > NORM_WARN_TOLERANCE {
        warnings.push(format!("{key}: norm {n:.6} re-normalized"));
    }
    Ok(v.into_iter().map(|x| x / n).collect())
}

impl EmbeddingSet {
    pub fn new<I>(labels: Vec<(ColorTerm, Vec<f32>)>, images: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, Vec<f32>)>,
    {
        let dim = labels
            .first()
            .map(|(_, v)| v.len())
            .ok_or_else(|| Error::Probe("no label embeddings".into()))?;
        let mut warnings = Vec::new();
        let mut by_term: Vec<Option<Vec<f64>>> = vec![None; TERM_COUNT];
        for (term, v) in labels {
            let v = normalized(&format!("label {term}"), &v, dim, &mut warnings)?;
            if by_term[term.index()].replace(v).is_some() {
                return Err(Error::Probe(format!(
                    "duplicate label embedding for {term}"
                )));
            }
        }
        let missing: Vec<&str> = ColorTerm::ALL
            .iter()
            .filter(|t| by_term[t.index()].is_none())
            .map(|t| t.name())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Probe(format!(
                "missing label embeddings: {}",
                missing.join(", ")
            )));
        }
        let mut map = HashMap::new();
        for (id, v) in images {
            let v = normalized(&format!("image {id}"), &v, dim, &mut warnings)?;
            map.insert(id, v);
        }
        Ok(EmbeddingSet {
            dim,
            labels: by_term.into_iter().map(Option::unwrap).collect(),
            images: map,
            warnings,
            model: None,
        })
    }

    /// Loads `images.bin` and `text-<template_id>.bin` from an embeddings
    /// directory. Text rows are keyed by label (palette label or canonical
    /// term name).
    pub fn load(dir: &Path, template_id: &str, palette: &Palette) -> Result<Self> {
        let text = read_embeddings(&dir.join(text_embeddings_file(template_id)))?;
        let images = read_embeddings(&dir.join(IMAGE_EMBEDDINGS_FILE))?;
        if text.header.dim != images.header.dim {
            return Err(Error::Probe(format!(
                "text embeddings have dimension {}, image embeddings {}",
                text.header.dim, images.header.dim
            )));
        }
        let labels = text
            .keys
            .iter()
            .zip(text.rows)
            .map(|(k, v)| {
                palette.term_for_label(k).map(|t| (t, v)).ok_or_else(|| {
                    Error::Probe(format!("unknown label key {k:?} in text embeddings"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut set = EmbeddingSet::new(labels, images.keys.into_iter().zip(images.rows))?;
        set.model = images
            .header
            .extra
            .get("model")
            .and_then(|v| v.as_str())
            .map(str::to_string);
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[Vec<f64>] {
        &self.labels
    }

    pub fn image(&self, id: &str) -> Option<&[f64]> {
        self.images.get(id).map(Vec::as_slice)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn model(&self) -> Option<&str> {
        self.model.as_deref()
    }
}

/// One prediction per manifest record, in manifest order.
pub fn run_experiment(
    manifest: &DatasetManifest,
    template_id: &str,
    embeddings: &EmbeddingSet,
) -> Result<Vec<PredictionRecord>> {
    manifest
        .records
        .par_iter()
        .map(|r| {
            let v = embeddings
                .image(&r.id)
                .ok_or_else(|| Error::Probe(format!("no image embedding for record {}", r.id)))?;
            let p = predict_label(v, embeddings.labels())?;
            Ok(PredictionRecord {
                record_id: r.id.clone(),
                template_id: template_id.to_string(),
                scores: ColorTerm::ALL
                    .iter()
                    .map(|&t| (t, p.scores[t.index()]))
                    .collect(),
                predicted: p.label,
                outcome: categorize_outcome(p.label, r),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub format: String,
    pub manifest: String,
    pub manifest_kind: DatasetKind,
    pub white_background: bool,
    pub master_seed: u64,
    pub template_id: String,
    pub template_text: String,
    pub palette_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    pub records: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ResultsFile {
    pub header: ResultsHeader,
    pub predictions: Vec<PredictionRecord>,
}

impl ResultsFile {
    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialize");
        out.push('\n');
        for p in &self.predictions {
            out.push_str(&serde_json::to_string(p).expect("prediction serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: ResultsHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Probe("empty results file".into()))?,
        )?;
        if header.format != RESULTS_FORMAT {
            return Err(Error::Probe(format!(
                "unsupported results format {:?}",
                header.format
            )));
        }
        let predictions = lines
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<PredictionRecord>, _>>()?;
        Ok(ResultsFile {
            header,
            predictions,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ndjson(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ndjson()).map_err(|e| Error::io(path, e))
    }
}

//! Per-layer neuron profiling over an activation matrix.

use std::collections::HashMap;

use image::imageops::{self, FilterType};
use image::RgbImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::classify::{classify_neuron, ClassifierInputs, NeuronType, Thresholds};
use super::matrix::{top_k_among, ActivationMatrix, CropBox};
use super::selectivity::{
    color_label_selectivity, color_selectivity_index, dominant_hue, neuron_feature, HueHistogram,
    LabelFrequencies,
};
use crate::error::{Error, Result};
use crate::palette::ColorTerm;
use crate::stimulus::{DatasetManifest, SceneSpec, Variant, GRAY_ID_SUFFIX};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NeuronProfile {
    pub layer: String,
    pub neuron: usize,
    pub color_selectivity: Option<f64>,
    pub f_word: LabelFrequencies,
    pub f_font: LabelFrequencies,
    pub f_background: LabelFrequencies,
    /// Mean of the font and background frequencies.
    pub f_pooled: LabelFrequencies,
    pub dominant_hue: Option<f64>,
    pub neuron_type: NeuronType,
    pub stroop_max: f64,
    pub reference_max: f64,
    pub text_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StroopLabels {
    pub word: ColorTerm,
    pub font: ColorTerm,
    pub background: ColorTerm,
}

/// What each matrix column means for the analysis.
#[derive(Clone, Debug, Default)]
pub struct ColumnRoles {
    pub stroop: Vec<usize>,
    pub stroop_labels: HashMap<usize, StroopLabels>,
    pub reference: Vec<usize>,
    pub text: Vec<usize>,
    pub gray_of: HashMap<usize, usize>,
}

impl ColumnRoles {
    /// Maps image references to roles using the Stroop manifest and an
    /// optional reference (probe) manifest.
    ///
    /// Without a probe manifest every color column is a reference column and
    /// the Stroop columns double as the text-bearing probe set.
    pub fn resolve(
        refs: &[String],
        stroop: &DatasetManifest,
        probe: Option<&DatasetManifest>,
    ) -> Result<Self> {
        let stroop_ids: HashMap<&str, StroopLabels> = stroop
            .records
            .iter()
            .filter_map(|r| match &r.spec {
                SceneSpec::Stroop(s) => Some((
                    r.id.as_str(),
                    StroopLabels {
                        word: s.word,
                        font: s.font_color,
                        background: s.background,
                    },
                )),
                SceneSpec::Shape(_) => None,
            })
            .collect();
        if stroop.header.variant != Variant::Color || stroop_ids.is_empty() {
            return Err(Error::Activation(
                "the Stroop manifest must be a color Stroop corpus".into(),
            ));
        }
        let probe_ids: Option<HashMap<&str, bool>> = probe.map(|m| {
            m.records
                .iter()
                .map(|r| (r.id.as_str(), matches!(r.spec, SceneSpec::Stroop(_))))
                .collect()
        });
        let col_of: HashMap<&str, usize> = refs
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i))
            .collect();

        let mut roles = ColumnRoles::default();
        for (col, r) in refs.iter().enumerate() {
            if let Some(base) = r.strip_suffix(GRAY_ID_SUFFIX) {
                if let Some(&c) = col_of.get(base) {
                    roles.gray_of.insert(c, col);
                }
                continue;
            }
            if let Some(&labels) = stroop_ids.get(r.as_str()) {
                roles.stroop.push(col);
                roles.stroop_labels.insert(col, labels);
            }
            match &probe_ids {
                Some(ids) => {
                    if let Some(&text_bearing) = ids.get(r.as_str()) {
                        roles.reference.push(col);
                        if text_bearing {
                            roles.text.push(col);
                        }
                    }
                }
                None => roles.reference.push(col),
            }
        }
        if probe_ids.is_none() {
            roles.text = roles.stroop.clone();
        }
        if roles.stroop.is_empty() {
            return Err(Error::Activation(
                "no activation column matches a Stroop manifest record".into(),
            ));
        }
        if roles.reference.is_empty() {
            return Err(Error::Activation(
                "no activation column matches a reference manifest record".into(),
            ));
        }
        Ok(roles)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisConfig {
    pub k: usize,
    pub thresholds: Thresholds,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k: 100,
            thresholds: Thresholds::default(),
        }
    }
}

/// Supplies the pixels behind matrix columns for neuron features.
pub trait FeatureSource: Sync {
    /// Image for `column` cropped to `crop` (source pixel coordinates) and
    /// resampled to the common feature geometry.
    fn crop(&self, column: usize, crop: Option<CropBox>) -> Option<RgbImage>;
}

/// Side of the square thumbnails neuron features are averaged at.
pub const FEATURE_SIDE: u32 = 32;

/// In-memory thumbnails of source images, keyed by matrix column.
pub struct ThumbnailSource {
    thumbs: HashMap<usize, RgbImage>,
    /// Side length of the stored thumbnails.
    side: u32,
    /// Source image geometry, for mapping crop boxes.
    source: (u32, u32),
}

impl ThumbnailSource {
    pub fn new(images: HashMap<usize, RgbImage>, side: u32) -> Self {
        let source = images
            .values()
            .next()
            .map(|i| i.dimensions())
            .unwrap_or((side, side));
        let thumbs = images
            .into_iter()
            .map(|(c, img)| (c, imageops::resize(&img, side, side, FilterType::Triangle)))
            .collect();
        ThumbnailSource {
            thumbs,
            side,
            source,
        }
    }

    /// Wraps thumbnails that were already downsampled from `source`-sized
    /// images. All thumbnails must be square with the same side.
    pub fn from_thumbnails(thumbs: HashMap<usize, RgbImage>, source: (u32, u32)) -> Result<Self> {
        let side = thumbs
            .values()
            .next()
            .map(|t| t.width())
            .unwrap_or(FEATURE_SIDE);
        if let Some(bad) = thumbs.values().find(|t| t.dimensions() != (side, side)) {
            return Err(Error::Activation(format!(
                "thumbnail of size {:?} differs from {side}x{side}",
                bad.dimensions()
            )));
        }
        Ok(ThumbnailSource {
            thumbs,
            side,
            source,
        })
    }
}

impl FeatureSource for ThumbnailSource {
    fn crop(&self, column: usize, crop: Option<CropBox>) -> Option<RgbImage> {
        let thumb = self.thumbs.get(&column)?;
        let region = match crop {
            None => thumb.clone(),
            Some(CropBox([x0, y0, x1, y1])) => {
                let sx = self.side as f64 / self.source.0 as f64;
                let sy = self.side as f64 / self.source.1 as f64;
                let tx0 = ((x0 as f64 * sx).floor() as u32).min(self.side - 1);
                let ty0 = ((y0 as f64 * sy).floor() as u32).min(self.side - 1);
                let tx1 = ((x1 as f64 * sx).ceil() as u32).clamp(tx0 + 1, self.side);
                let ty1 = ((y1 as f64 * sy).ceil() as u32).clamp(ty0 + 1, self.side);
                imageops::crop_imm(thumb, tx0, ty0, tx1 - tx0, ty1 - ty0).to_image()
            }
        };
        Some(if region.dimensions() == (FEATURE_SIDE, FEATURE_SIDE) {
            region
        } else {
            imageops::resize(&region, FEATURE_SIDE, FEATURE_SIDE, FilterType::Triangle)
        })
    }
}

/// Crop boxes keyed by (layer, neuron, image reference).
pub type CropIndex = HashMap<(String, usize, String), CropBox>;

fn max_over(matrix: &ActivationMatrix, neuron: usize, cols: &[usize]) -> Option<f64> {
    let row = matrix.row(neuron);
    cols.iter().map(|&c| row[c] as f64).reduce(f64::max)
}

/// Profiles every neuron of one layer.
pub fn analyze_layer(
    matrix: &ActivationMatrix,
    roles: &ColumnRoles,
    config: &AnalysisConfig,
    features: Option<&dyn FeatureSource>,
    crops: Option<&CropIndex>,
) -> Result<Vec<NeuronProfile>> {
    config.thresholds.validate()?;
    (0..matrix.neurons())
        .into_par_iter()
        .map(|neuron| profile_neuron(matrix, neuron, roles, config, features, crops))
        .collect()
}

fn profile_neuron(
    matrix: &ActivationMatrix,
    neuron: usize,
    roles: &ColumnRoles,
    config: &AnalysisConfig,
    features: Option<&dyn FeatureSource>,
    crops: Option<&CropIndex>,
) -> Result<NeuronProfile> {
    let stroop_top = top_k_among(matrix, neuron, &roles.stroop, config.k)?;
    let labels = |f: fn(&StroopLabels) -> ColorTerm| {
        color_label_selectivity(&stroop_top, |c| roles.stroop_labels.get(&c).map(f))
            .unwrap_or(LabelFrequencies::ZERO)
    };
    let f_word = labels(|l| l.word);
    let f_font = labels(|l| l.font);
    let f_background = labels(|l| l.background);

    let stroop_max = stroop_top.max();
    let reference_max = max_over(matrix, neuron, &roles.reference).unwrap_or(0.0);
    let text_max = max_over(matrix, neuron, &roles.text);

    let mut ref_top = top_k_among(matrix, neuron, &roles.reference, config.k)?;
    let color_selectivity = {
        let gray: Option<Vec<f64>> = ref_top
            .entries
            .iter()
            .map(|e| roles.gray_of.get(&e.image).map(|&g| matrix.get(neuron, g)))
            .collect();
        match gray {
            Some(gray) => {
                let color: Vec<f64> = ref_top.weights().collect();
                color_selectivity_index(&color, &gray)?
            }
            None => None,
        }
    };

    let dominant_hue = match features {
        Some(src) => {
            if let Some(index) = crops {
                for e in &mut ref_top.entries {
                    let key = (
                        matrix.layer().to_string(),
                        neuron,
                        matrix.image_refs()[e.image].clone(),
                    );
                    e.crop = index.get(&key).copied();
                }
            }
            let imgs: Option<Vec<RgbImage>> = ref_top
                .entries
                .iter()
                .map(|e| src.crop(e.image, e.crop))
                .collect();
            match imgs {
                Some(imgs) if !imgs.is_empty() => {
                    let weights: Vec<f64> = ref_top.weights().collect();
                    dominant_hue(&neuron_feature(&weights, &imgs)?)
                }
                _ => None,
            }
        }
        None => None,
    };

    let neuron_type = classify_neuron(
        &ClassifierInputs {
            word: Some(f_word),
            font: Some(f_font),
            background: Some(f_background),
            text_max,
            stroop_max,
            reference_max,
        },
        &config.thresholds,
    )?;

    Ok(NeuronProfile {
        layer: matrix.layer().to_string(),
        neuron,
        color_selectivity,
        f_word,
        f_font,
        f_pooled: LabelFrequencies::mean(&f_font, &f_background),
        f_background,
        dominant_hue,
        neuron_type,
        stroop_max,
        reference_max,
        text_max,
    })
}

/// Hue histogram of the color-selective neurons (selectivity at or above
/// `alpha_threshold` and a defined dominant hue).
pub fn hue_histogram(
    profiles: &[NeuronProfile],
    bins: usize,
    alpha_threshold: f64,
) -> Result<HueHistogram> {
    let hues = profiles
        .iter()
        .filter_map(|p| match (p.color_selectivity, p.dominant_hue) {
            (Some(a), Some(h)) if a >= alpha_threshold => Some(h),
            _ => None,
        });
    HueHistogram::from_hues(hues, bins)
}

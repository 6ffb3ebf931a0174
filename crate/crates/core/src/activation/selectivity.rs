//! Per-neuron selectivity measures.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use image::{Rgb as Px, RgbImage};
use serde::{Deserialize, Serialize};

use super::matrix::TopKSet;
use crate::error::{Error, Result};
use crate::palette::{hue_of, ColorTerm, Rgb, TERM_COUNT};

/// Color selectivity index: the relative activation drop when the same
/// images are shown without color, `max(0, 1 - Σgray / Σcolor)` clamped to
/// [0, 1]. `None` when the color activations sum to zero.
pub fn color_selectivity_index(color_acts: &[f64], gray_acts: &[f64]) -> Result<Option<f64>> {
    if color_acts.len() != gray_acts.len() {
        return Err(Error::Activation(format!(
            "color/gray activation lengths differ ({} vs {})",
            color_acts.len(),
            gray_acts.len()
        )));
    }
    let color: f64 = color_acts.iter().sum();
    let gray: f64 = gray_acts.iter().sum();
    if !(color > 0.0) {
        return Ok(None);
    }
    Ok(Some((1.0 - gray / color).clamp(0.0, 1.0)))
}

/// Activation-weighted share `f_c` of each color label among a neuron's top
/// images.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "BTreeMap<ColorTerm, f64>", from = "BTreeMap<ColorTerm, f64>")]
pub struct LabelFrequencies(pub [f64; TERM_COUNT]);

impl From<LabelFrequencies> for BTreeMap<ColorTerm, f64> {
    fn from(f: LabelFrequencies) -> Self {
        ColorTerm::ALL
            .iter()
            .map(|&t| (t, f.0[t.index()]))
            .collect()
    }
}

impl From<BTreeMap<ColorTerm, f64>> for LabelFrequencies {
    fn from(m: BTreeMap<ColorTerm, f64>) -> Self {
        let mut out = [0.0; TERM_COUNT];
        for (t, v) in m {
            out[t.index()] = v;
        }
        LabelFrequencies(out)
    }
}

impl LabelFrequencies {
    pub const ZERO: LabelFrequencies = LabelFrequencies([0.0; TERM_COUNT]);

    pub fn get(&self, term: ColorTerm) -> f64 {
        self.0[term.index()]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Term with the largest share; vocabulary order breaks ties.
    pub fn argmax(&self) -> (ColorTerm, f64) {
        let mut best = (ColorTerm::ALL[0], self.0[0]);
        for &t in &ColorTerm::ALL[1..] {
            if self.0[t.index()] > best.1 {
                best = (t, self.0[t.index()]);
            }
        }
        best
    }

    /// Element-wise mean of two frequency maps.
    pub fn mean(a: &LabelFrequencies, b: &LabelFrequencies) -> LabelFrequencies {
        let mut out = [0.0; TERM_COUNT];
        for (o, (x, y)) in out.iter_mut().zip(a.0.iter().zip(&b.0)) {
            *o = (x + y) / 2.0;
        }
        LabelFrequencies(out)
    }
}

/// `f_c = Σ_{top images labeled c} w / Σ_{all top images} w`.
///
/// `label_of` maps a matrix column to its label in the modality under test
/// (unlabeled images still count in the denominator). `None` when the top
/// activations sum to zero.
pub fn color_label_selectivity<F>(topk: &TopKSet, label_of: F) -> Option<LabelFrequencies>
where
    F: Fn(usize) -> Option<ColorTerm>,
{
    let mut per_label = [0.0; TERM_COUNT];
    let mut total = 0.0;
    for e in &topk.entries {
        total += e.activation;
        if let Some(t) = label_of(e.image) {
            per_label[t.index()] += e.activation;
        }
    }
    if !(total > 0.0) {
        return None;
    }
    for v in &mut per_label {
        *v /= total;
    }
    Some(LabelFrequencies(per_label))
}

/// Pixel-wise activation-weighted mean of the crops ("neuron feature").
///
/// Crops must share a geometry. If all weights are zero the plain mean is used.
pub fn neuron_feature(weights: &[f64], crops: &[RgbImage]) -> Result<RgbImage> {
    if crops.is_empty() {
        return Err(Error::Activation(
            "neuron feature of an empty crop set".into(),
        ));
    }
    if weights.len() != crops.len() {
        return Err(Error::Activation(format!(
            "{} weights for {} crops",
            weights.len(),
            crops.len()
        )));
    }
    let (w, h) = crops[0].dimensions();
    if crops.iter().any(|c| c.dimensions() != (w, h)) {
        return Err(Error::Activation("crops differ in geometry".into()));
    }
    let total: f64 = weights.iter().sum();
    let uniform = vec![1.0; crops.len()];
    let (weights, total) = if total > 0.0 {
        (weights, total)
    } else {
        (uniform.as_slice(), crops.len() as f64)
    };
    let mut acc = vec![0.0f64; (w * h * 3) as usize];
    for (crop, &wt) in crops.iter().zip(weights) {
        for (a, &v) in acc.iter_mut().zip(crop.as_raw()) {
            *a += wt * v as f64;
        }
    }
    let raw: Vec<u8> = acc
        .iter()
        .map(|a| (a / total).round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(RgbImage::from_raw(w, h, raw).expect("buffer size matches geometry"))
}

/// Mean saturation below which a feature counts as achromatic.
pub const MIN_FEATURE_SATURATION: f64 = 0.1;

/// Saturation-weighted circular mean of the pixel hues, in degrees.
pub fn dominant_hue(feature: &RgbImage) -> Option<f64> {
    let n = feature.width() as f64 * feature.height() as f64;
    if n == 0.0 {
        return None;
    }
    let (mut sum_s, mut sx, mut sy) = (0.0, 0.0, 0.0);
    for &Px(p) in feature.pixels() {
        let rgb = Rgb(p);
        let s = rgb.saturation();
        sum_s += s;
        if let Some(h) = hue_of(rgb) {
            let rad = h * PI / 180.0;
            sx += s * rad.cos();
            sy += s * rad.sin();
        }
    }
    if sum_s / n < MIN_FEATURE_SATURATION {
        return None;
    }
    if sx.hypot(sy) < 1e-12 * sum_s {
        return None;
    }
    let deg = sy.atan2(sx).to_degrees().rem_euclid(360.0);
    Some(if deg >= 360.0 { 0.0 } else { deg })
}

/// Normalized histogram of hues over fixed-width bins on [0, 360).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HueHistogram {
    pub mass: Vec<f64>,
    /// Number of hues binned; zero marks an empty histogram.
    pub count: usize,
}

impl HueHistogram {
    pub fn from_hues(hues: impl IntoIterator<Item = f64>, bins: usize) -> Result<Self> {
        if bins == 0 {
            return Err(Error::Activation("histogram needs at least one bin".into()));
        }
        let width = 360.0 / bins as f64;
        let mut counts = vec![0usize; bins];
        let mut count = 0;
        for h in hues {
            let h = h.rem_euclid(360.0);
            let b = ((h / width).floor() as usize).min(bins - 1);
            counts[b] += 1;
            count += 1;
        }
        let mass = counts
            .iter()
            .map(|&c| {
                if count == 0 {
                    0.0
                } else {
                    c as f64 / count as f64
                }
            })
            .collect();
        Ok(HueHistogram { mass, count })
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn bins(&self) -> usize {
        self.mass.len()
    }

    /// Lower edge of each bin in degrees.
    pub fn edges(&self) -> Vec<f64> {
        let width = 360.0 / self.bins() as f64;
        (0..self.bins()).map(|i| i as f64 * width).collect()
    }
}

/// Pearson correlation of two equally sized sequences; `None` if either has
/// zero variance.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::Activation(format!(
            "pearson over sequences of different length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Ok(None);
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    // sqrt of the product keeps identical inputs at exactly 1
    Ok(Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)))
}

pub fn pearson_histograms(a: &HueHistogram, b: &HueHistogram) -> Result<Option<f64>> {
    if a.bins() != b.bins() {
        return Err(Error::Activation(format!(
            "histograms have {} and {} bins",
            a.bins(),
            b.bins()
        )));
    }
    pearson(&a.mass, &b.mass)
}

//! Neuron taxonomy from per-modality label frequencies.
//!
//! Decision list, first match wins:
//!
//! 1. `NotActivated`: the Stroop maximum stays strictly below half the
//!    reference maximum (or is zero).
//! 2. `ColorMultimodal(c)`: one term reaches `theta_high` in the word, font
//!    and background modalities at once.
//! 3. `ColorWord(c)`: a term reaches `theta_high` in the word modality and in
//!    neither visual modality.
//! 4. `Color(c)`: a term reaches `theta_high` in the font or background
//!    modality.
//! 5. `AnyWord`: text-bearing reference images drive the neuron to at least
//!    half its reference maximum.
//! 6. otherwise `Unclassified`.
//!
//! When several terms qualify at a step the one with the largest qualifying
//! share wins, vocabulary order breaking ties.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::selectivity::LabelFrequencies;
use crate::error::{Error, Result};
use crate::palette::{Chromaticity, ColorTerm};

/// Fraction of the reference maximum a neuron must reach on the Stroop
/// corpus to count as activated.
pub const ACTIVE_RATIO: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum label share that counts as "high" selectivity.
    pub theta_high: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { theta_high: 0.5 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_high > 0.0 && self.theta_high <= 1.0) {
            return Err(Error::Activation(format!(
                "theta_high {} outside (0, 1]",
                self.theta_high
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", content = "term", rename_all = "snake_case")]
pub enum NeuronType {
    Color(ColorTerm),
    AnyWord,
    ColorWord(ColorTerm),
    ColorMultimodal(ColorTerm),
    NotActivated,
    Unclassified,
}

/// Reporting buckets; `Color` splits by the chromaticity of its term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeBucket {
    ColorChromatic,
    ColorAchromatic,
    AnyWord,
    ColorWord,
    ColorMultimodal,
    NotActivated,
    Unclassified,
}

impl TypeBucket {
    pub const ALL: [TypeBucket; 7] = [
        TypeBucket::ColorChromatic,
        TypeBucket::ColorAchromatic,
        TypeBucket::AnyWord,
        TypeBucket::ColorWord,
        TypeBucket::ColorMultimodal,
        TypeBucket::NotActivated,
        TypeBucket::Unclassified,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TypeBucket::ColorChromatic => "color_chromatic",
            TypeBucket::ColorAchromatic => "color_achromatic",
            TypeBucket::AnyWord => "any_word",
            TypeBucket::ColorWord => "color_word",
            TypeBucket::ColorMultimodal => "color_multimodal",
            TypeBucket::NotActivated => "not_activated",
            TypeBucket::Unclassified => "unclassified",
        }
    }
}

impl NeuronType {
    pub fn bucket(self) -> TypeBucket {
        match self {
            NeuronType::Color(t) => match t.chromaticity() {
                Chromaticity::Chromatic => TypeBucket::ColorChromatic,
                Chromaticity::Achromatic => TypeBucket::ColorAchromatic,
            },
            NeuronType::AnyWord => TypeBucket::AnyWord,
            NeuronType::ColorWord(_) => TypeBucket::ColorWord,
            NeuronType::ColorMultimodal(_) => TypeBucket::ColorMultimodal,
            NeuronType::NotActivated => TypeBucket::NotActivated,
            NeuronType::Unclassified => TypeBucket::Unclassified,
        }
    }
}

impl fmt::Display for NeuronType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NeuronType::Color(t) => write!(f, "color({}, {t})", t.chromaticity().as_str()),
            NeuronType::AnyWord => f.write_str("any_word"),
            NeuronType::ColorWord(t) => write!(f, "color_word({t})"),
            NeuronType::ColorMultimodal(t) => write!(f, "color_multimodal({t})"),
            NeuronType::NotActivated => f.write_str("not_activated"),
            NeuronType::Unclassified => f.write_str("unclassified"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ClassifierInputs {
    pub word: Option<LabelFrequencies>,
    pub font: Option<LabelFrequencies>,
    pub background: Option<LabelFrequencies>,
    /// Maximum activation over text-bearing reference images, if any exist.
    pub text_max: Option<f64>,
    pub stroop_max: f64,
    pub reference_max: f64,
}

/// Highest-scoring term among those passing `qualifies`.
fn pick<S, Q>(score: S, qualifies: Q) -> Option<ColorTerm>
where
    S: Fn(ColorTerm) -> f64,
    Q: Fn(ColorTerm) -> bool,
{
    let mut best: Option<(ColorTerm, f64)> = None;
    for t in ColorTerm::ALL {
        if !qualifies(t) {
            continue;
        }
        let s = score(t);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((t, s));
        }
    }
    best.map(|(t, _)| t)
}

pub fn classify_neuron(inputs: &ClassifierInputs, thresholds: &Thresholds) -> Result<NeuronType> {
    thresholds.validate()?;
    let missing: Vec<&str> = [
        ("word", inputs.word.is_none()),
        ("font", inputs.font.is_none()),
        ("background", inputs.background.is_none()),
    ]
    .into_iter()
    .filter_map(|(name, absent)| absent.then_some(name))
    .collect();
    if !missing.is_empty() {
        return Err(Error::Activation(format!(
            "missing label frequencies for modality: {}",
            missing.join(", ")
        )));
    }
    let (word, font, bg) = (
        inputs.word.unwrap(),
        inputs.font.unwrap(),
        inputs.background.unwrap(),
    );
    let th = thresholds.theta_high;

    if inputs.stroop_max <= 0.0 || inputs.stroop_max < ACTIVE_RATIO * inputs.reference_max {
        return Ok(NeuronType::NotActivated);
    }
    let multimodal = pick(
        |t| word.get(t).min(font.get(t)).min(bg.get(t)),
        |t| word.get(t) >= th && font.get(t) >= th && bg.get(t) >= th,
    );
    if let Some(t) = multimodal {
        return Ok(NeuronType::ColorMultimodal(t));
    }
    let color_word = pick(
        |t| word.get(t),
        |t| word.get(t) >= th && font.get(t) < th && bg.get(t) < th,
    );
    if let Some(t) = color_word {
        return Ok(NeuronType::ColorWord(t));
    }
    let color = pick(
        |t| font.get(t).max(bg.get(t)),
        |t| font.get(t) >= th || bg.get(t) >= th,
    );
    if let Some(t) = color {
        return Ok(NeuronType::Color(t));
    }
    if inputs
        .text_max
        .is_some_and(|m| m > 0.0 && m >= ACTIVE_RATIO * inputs.reference_max)
    {
        return Ok(NeuronType::AnyWord);
    }
    Ok(NeuronType::Unclassified)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerDistribution {
    pub layer: String,
    pub total: usize,
    pub counts: BTreeMap<TypeBucket, usize>,
}

impl LayerDistribution {
    pub fn count(&self, bucket: TypeBucket) -> usize {
        self.counts.get(&bucket).copied().unwrap_or(0)
    }

    pub fn ratio(&self, bucket: TypeBucket) -> Option<f64> {
        (self.total > 0).then(|| self.count(bucket) as f64 / self.total as f64)
    }
}

/// Per-layer counts of each type bucket, layers in first-seen order.
pub fn layer_type_distribution<'a, I>(typed: I) -> Vec<LayerDistribution>
where
    I: IntoIterator<Item = (&'a str, NeuronType)>,
{
    let mut out: Vec<LayerDistribution> = Vec::new();
    for (layer, ty) in typed {
        let idx = match out.iter().position(|d| d.layer == layer) {
            Some(i) => i,
            None => {
                out.push(LayerDistribution {
                    layer: layer.to_string(),
                    total: 0,
                    counts: TypeBucket::ALL.iter().map(|&b| (b, 0)).collect(),
                });
                out.len() - 1
            }
        };
        let d = &mut out[idx];
        d.total += 1;
        *d.counts.entry(ty.bucket()).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn only(term: ColorTerm, share: f64) -> LabelFrequencies {
        let mut f = LabelFrequencies::ZERO;
        f.0[term.index()] = share;
        f
    }

    fn inputs(
        word: LabelFrequencies,
        font: LabelFrequencies,
        bg: LabelFrequencies,
    ) -> ClassifierInputs {
        ClassifierInputs {
            word: Some(word),
            font: Some(font),
            background: Some(bg),
            text_max: None,
            stroop_max: 1.0,
            reference_max: 1.0,
        }
    }

    #[test]
    fn weak_stroop_response_is_not_activated() {
        let mut i = inputs(
            only(ColorTerm::Green, 1.0),
            only(ColorTerm::Green, 1.0),
            only(ColorTerm::Green, 1.0),
        );
        i.stroop_max = 0.4;
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::NotActivated
        );
        // exactly half counts as active
        i.stroop_max = 0.5;
        assert_ne!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::NotActivated
        );
        i.stroop_max = 0.0;
        i.reference_max = 0.0;
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::NotActivated
        );
    }

    #[test]
    fn green_everywhere_is_multimodal() {
        let g = only(ColorTerm::Green, 1.0);
        assert_eq!(
            classify_neuron(&inputs(g, g, g), &Thresholds::default()).unwrap(),
            NeuronType::ColorMultimodal(ColorTerm::Green)
        );
    }

    #[test]
    fn word_only_is_color_word() {
        let i = inputs(
            only(ColorTerm::Red, 0.9),
            only(ColorTerm::Blue, 0.3),
            LabelFrequencies::ZERO,
        );
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::ColorWord(ColorTerm::Red)
        );
    }

    #[test]
    fn font_or_background_is_color_with_chromaticity() {
        let i = inputs(
            LabelFrequencies::ZERO,
            LabelFrequencies::ZERO,
            only(ColorTerm::White, 0.7),
        );
        let t = classify_neuron(&i, &Thresholds::default()).unwrap();
        assert_eq!(t, NeuronType::Color(ColorTerm::White));
        assert_eq!(t.bucket(), TypeBucket::ColorAchromatic);
        // word and font agree but background does not: a color neuron
        let i = inputs(
            only(ColorTerm::Red, 0.8),
            only(ColorTerm::Red, 0.8),
            LabelFrequencies::ZERO,
        );
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::Color(ColorTerm::Red)
        );
    }

    #[test]
    fn text_response_without_dominant_term_is_any_word() {
        let flat = LabelFrequencies([1.0 / 11.0; 11]);
        let mut i = inputs(flat, flat, flat);
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::Unclassified
        );
        i.text_max = Some(0.6);
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::AnyWord
        );
        i.text_max = Some(0.4);
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::Unclassified
        );
    }

    #[test]
    fn missing_modalities_are_listed() {
        let mut i = inputs(
            LabelFrequencies::ZERO,
            LabelFrequencies::ZERO,
            LabelFrequencies::ZERO,
        );
        i.font = None;
        i.background = None;
        let err = classify_neuron(&i, &Thresholds::default())
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("font") && err.contains("background") && !err.contains("word,"),
            "{err}"
        );
        assert!(classify_neuron(
            &inputs(
                LabelFrequencies::ZERO,
                LabelFrequencies::ZERO,
                LabelFrequencies::ZERO
            ),
            &Thresholds { theta_high: 0.0 }
        )
        .is_err());
    }

    #[test]
    fn ties_go_to_vocabulary_order() {
        let mut f = LabelFrequencies::ZERO;
        f.0[ColorTerm::Red.index()] = 0.5;
        f.0[ColorTerm::Blue.index()] = 0.5;
        let i = inputs(f, f, f);
        assert_eq!(
            classify_neuron(&i, &Thresholds::default()).unwrap(),
            NeuronType::ColorMultimodal(ColorTerm::Blue)
        );
    }

    #[test]
    fn distribution_counts() {
        let typed = vec![
            ("a", NeuronType::NotActivated),
            ("a", NeuronType::NotActivated),
            ("b", NeuronType::Color(ColorTerm::Red)),
            ("b", NeuronType::Color(ColorTerm::Black)),
            ("b", NeuronType::ColorWord(ColorTerm::Red)),
        ];
        let d = layer_type_distribution(typed.iter().map(|(l, t)| (*l, *t)));
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].count(TypeBucket::NotActivated), 2);
        assert_eq!(d[0].ratio(TypeBucket::NotActivated), Some(1.0));
        assert_eq!(d[1].total, 3);
        assert_eq!(d[1].count(TypeBucket::ColorChromatic), 1);
        assert_eq!(d[1].count(TypeBucket::ColorAchromatic), 1);
        assert_eq!(d[1].count(TypeBucket::ColorWord), 1);
        for layer in &d {
            assert_eq!(layer.counts.values().sum::<usize>(), layer.total);
        }
    }

    #[test]
    fn types_serialize_with_terms() {
        let s = serde_json::to_string(&NeuronType::ColorWord(ColorTerm::Red)).unwrap();
        assert_eq!(s, r#"{"type":"color_word","term":"red"}"#);
        let s = serde_json::to_string(&NeuronType::AnyWord).unwrap();
        assert_eq!(s, r#"{"type":"any_word"}"#);
        let back: NeuronType = serde_json::from_str(&s).unwrap();
        assert_eq!(back, NeuronType::AnyWord);
    }
}

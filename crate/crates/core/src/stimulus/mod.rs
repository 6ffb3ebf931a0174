//! Stimulus corpora: shape-on-background scenes and Stroop color-word scenes.
//!
//! Enumeration is closed-form and cheap. Every record carries its own seed,
//! derived from `(master_seed, combo index, sample index)`, so any subset of
//! a manifest renders exactly as it would inside the full corpus.

mod glyphs;
mod render;
mod shapes;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::palette::{ColorTerm, Palette};

pub use glyphs::{font_name, FONT_COUNT};
pub use render::{grayscale_variant, render_record, render_scene};
pub use shapes::ShapeKind;

pub const GENERATOR_VERSION: &str = concat!("colorprobe-stimulus/", env!("CARGO_PKG_VERSION"));
pub const MANIFEST_FORMAT: &str = "colorprobe-manifest/1";

/// Pixels kept clear between rendered text and the canvas edge.
const TEXT_MARGIN: f64 = 2.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageGeometry {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageGeometry {
    fn default() -> Self {
        ImageGeometry {
            width: 224,
            height: 224,
        }
    }
}

impl ImageGeometry {
    pub fn side(&self) -> f64 {
        self.width.min(self.height) as f64
    }
}

/// Sampling ranges for per-record render parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub geometry: ImageGeometry,
    pub rotation_deg: (f64, f64),
    pub scale: (f64, f64),
    pub font_size: (f64, f64),
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            geometry: ImageGeometry::default(),
            rotation_deg: (0.0, 360.0),
            scale: (0.15, 0.6),
            font_size: (18.0, 64.0),
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let g = self.geometry;
        if g.width < 8 || g.height < 8 {
            return Err(Error::Stimulus(format!(
                "geometry {}x{} too small",
                g.width, g.height
            )));
        }
        let (lo, hi) = self.scale;
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(Error::Stimulus(format!(
                "scale range ({lo}, {hi}) must satisfy 0 < lo <= hi <= 1"
            )));
        }
        let (lo, hi) = self.rotation_deg;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Stimulus(format!("bad rotation range ({lo}, {hi})")));
        }
        let (lo, hi) = self.font_size;
        if !(lo > 0.0 && lo <= hi) {
            return Err(Error::Stimulus(format!("bad font size range ({lo}, {hi})")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeSceneSpec {
    pub shape: ShapeKind,
    pub background: ColorTerm,
    pub object_color: ColorTerm,
    pub rotation: f64,
    /// Normalized center in [0,1]².
    pub center: [f64; 2],
    /// Diameter of the shape's bounding circle as a fraction of the image side.
    pub scale: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StroopSceneSpec {
    pub word: ColorTerm,
    pub font_color: ColorTerm,
    pub background: ColorTerm,
    pub font_id: usize,
    /// Cap height in pixels.
    pub font_size: f64,
    /// Normalized center of the text box.
    pub position: [f64; 2],
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SceneSpec {
    Shape(ShapeSceneSpec),
    Stroop(StroopSceneSpec),
}

impl SceneSpec {
    pub fn background(&self) -> ColorTerm {
        match self {
            SceneSpec::Shape(s) => s.background,
            SceneSpec::Stroop(s) => s.background,
        }
    }

    /// Color of the foreground: the shape, or the font.
    pub fn foreground(&self) -> ColorTerm {
        match self {
            SceneSpec::Shape(s) => s.object_color,
            SceneSpec::Stroop(s) => s.font_color,
        }
    }

    pub fn written(&self) -> Option<ColorTerm> {
        match self {
            SceneSpec::Shape(_) => None,
            SceneSpec::Stroop(s) => Some(s.word),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            SceneSpec::Shape(s) => s.seed,
            SceneSpec::Stroop(s) => s.seed,
        }
    }

    /// Checks the color-exclusion constraints of the corpus.
    pub fn check_colors(&self) -> Result<()> {
        match self {
            SceneSpec::Shape(s) if s.object_color == s.background => Err(Error::Stimulus(format!(
                "object color equals background ({})",
                s.background
            ))),
            SceneSpec::Stroop(s) if s.font_color == s.word => Err(Error::Stimulus(format!(
                "font color equals the written word ({})",
                s.word
            ))),
            SceneSpec::Stroop(s) if s.background == s.word => Err(Error::Stimulus(format!(
                "background equals the written word ({})",
                s.word
            ))),
            SceneSpec::Stroop(s) if s.background == s.font_color => Err(Error::Stimulus(format!(
                "background equals the font color ({})",
                s.background
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StimulusRecord {
    pub id: String,
    pub spec: SceneSpec,
    pub path: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Shapes,
    Stroop,
}

/// Whether the images of a manifest are the colored scenes or their
/// luminance-only twins.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Color,
    Gray,
}

/// Suffix appended to record ids in grayscale manifests.
pub const GRAY_ID_SUFFIX: &str = "~gray";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub kind: DatasetKind,
    #[serde(default)]
    pub variant: Variant,
    pub white_background: bool,
    pub master_seed: u64,
    pub samples_per_combo: u32,
    pub geometry: ImageGeometry,
    pub params: GenParams,
    pub palette_hash: String,
    pub generator_version: String,
    pub records: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<StimulusRecord>,
}

/// Seed of one record, stable under subsetting of the corpus.
pub fn record_seed(master_seed: u64, combo: u64, sample: u64) -> u64 {
    let mut h = Sha256::new();
    h.update(b"colorprobe/record-seed");
    h.update(master_seed.to_le_bytes());
    h.update(combo.to_le_bytes());
    h.update(sample.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().unwrap())
}

fn shape_combos() -> impl Iterator<Item = (ShapeKind, ColorTerm, ColorTerm)> {
    ShapeKind::ALL.into_iter().flat_map(|shape| {
        ColorTerm::ALL.into_iter().flat_map(move |bg| {
            ColorTerm::ALL
                .into_iter()
                .filter(move |&obj| obj != bg)
                .map(move |obj| (shape, bg, obj))
        })
    })
}

fn stroop_combos() -> impl Iterator<Item = (ColorTerm, ColorTerm, ColorTerm)> {
    ColorTerm::ALL.into_iter().flat_map(|word| {
        ColorTerm::ALL
            .into_iter()
            .filter(move |&font| font != word)
            .flat_map(move |font| {
                ColorTerm::ALL
                    .into_iter()
                    .filter(move |&bg| bg != word && bg != font)
                    .map(move |bg| (word, font, bg))
            })
    })
}

fn content_path(spec: &SceneSpec, params: &GenParams, palette_hash: &str) -> String {
    let mut h = Sha256::new();
    h.update(GENERATOR_VERSION.as_bytes());
    h.update(palette_hash.as_bytes());
    h.update(serde_json::to_vec(params).expect("params serialize"));
    h.update(serde_json::to_vec(spec).expect("spec serialize"));
    let digest = hex::encode(&h.finalize()[..10]);
    format!("images/{}/{}.png", &digest[..2], digest)
}

fn check_samples(samples_per_combo: u32) -> Result<()> {
    if samples_per_combo == 0 {
        return Err(Error::Stimulus(
            "samples_per_combo must be at least 1".into(),
        ));
    }
    Ok(())
}

fn draw_shape(
    (shape, background, object_color): (ShapeKind, ColorTerm, ColorTerm),
    seed: u64,
    params: &GenParams,
) -> ShapeSceneSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = params.geometry;
    let (rlo, rhi) = params.rotation_deg;
    let rotation = if rhi > rlo {
        rng.random_range(rlo..rhi)
    } else {
        rlo
    };
    let (slo, shi) = params.scale;
    let scale = rng.random_range(slo..=shi);
    let radius = scale * g.side() / 2.0;
    let mut axis = |extent: u32| {
        let lo = radius / extent as f64;
        let hi = 1.0 - lo;
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            0.5
        }
    };
    let cx = axis(g.width);
    let cy = axis(g.height);
    ShapeSceneSpec {
        shape,
        background,
        object_color,
        rotation,
        center: [cx, cy],
        scale,
        seed,
    }
}

fn draw_stroop(
    (word, font_color, background): (ColorTerm, ColorTerm, ColorTerm),
    seed: u64,
    params: &GenParams,
    palette: &Palette,
) -> Result<StroopSceneSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = params.geometry;
    let font_id = rng.random_range(0..FONT_COUNT);
    let (flo, fhi) = params.font_size;
    let mut font_size = rng.random_range(flo..=fhi);
    let text = palette.label(word).to_ascii_uppercase();
    let lay = glyphs::layout(font_id, &text, font_size)?;
    let avail_w = g.width as f64 - 2.0 * TEXT_MARGIN;
    let avail_h = g.height as f64 - 2.0 * TEXT_MARGIN;
    let fit = (avail_w / lay.width).min(avail_h / lay.height).min(1.0);
    font_size *= fit;
    let (w, h) = (lay.width * fit, lay.height * fit);
    let mut axis = |half: f64, extent: u32| {
        let lo = (half + TEXT_MARGIN) / extent as f64;
        let hi = 1.0 - lo;
        if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            0.5
        }
    };
    let px = axis(w / 2.0, g.width);
    let py = axis(h / 2.0, g.height);
    Ok(StroopSceneSpec {
        word,
        font_color,
        background,
        font_id,
        font_size,
        position: [px, py],
        seed,
    })
}

fn header(
    kind: DatasetKind,
    white_background: bool,
    samples_per_combo: u32,
    master_seed: u64,
    params: &GenParams,
    palette: &Palette,
    records: usize,
) -> ManifestHeader {
    ManifestHeader {
        format: MANIFEST_FORMAT.to_string(),
        kind,
        variant: Variant::Color,
        white_background,
        master_seed,
        samples_per_combo,
        geometry: params.geometry,
        params: params.clone(),
        palette_hash: palette.hash(),
        generator_version: GENERATOR_VERSION.to_string(),
        records,
        config_hash: None,
    }
}

/// Enumerates 8 shapes × 11 backgrounds × 10 object colors × `samples_per_combo`.
pub fn enumerate_shape_dataset(
    samples_per_combo: u32,
    master_seed: u64,
    params: &GenParams,
    palette: &Palette,
) -> Result<DatasetManifest> {
    check_samples(samples_per_combo)?;
    params.validate()?;
    let palette_hash = palette.hash();
    let mut records = Vec::with_capacity(880 * samples_per_combo as usize);
    for (combo_idx, combo) in shape_combos().enumerate() {
        for sample in 0..samples_per_combo {
            let seed = record_seed(master_seed, combo_idx as u64, sample as u64);
            let spec = SceneSpec::Shape(draw_shape(combo, seed, params));
            let (shape, bg, obj) = combo;
            records.push(StimulusRecord {
                id: format!("shape-{shape}-{bg}-{obj}-{sample:04}"),
                path: content_path(&spec, params, &palette_hash),
                spec,
            });
        }
    }
    let n = records.len();
    Ok(DatasetManifest {
        header: header(
            DatasetKind::Shapes,
            false,
            samples_per_combo,
            master_seed,
            params,
            palette,
            n,
        ),
        records,
    })
}

/// Enumerates 11 words × 10 font colors × 9 backgrounds × `samples_per_combo`,
/// or only the white-background subset (10 × 9 combos) when requested.
pub fn enumerate_stroop_dataset(
    samples_per_combo: u32,
    master_seed: u64,
    white_background: bool,
    params: &GenParams,
    palette: &Palette,
) -> Result<DatasetManifest> {
    check_samples(samples_per_combo)?;
    params.validate()?;
    let palette_hash = palette.hash();
    let mut records = Vec::new();
    for (combo_idx, combo) in stroop_combos().enumerate() {
        let (word, font, bg) = combo;
        if white_background && bg != ColorTerm::White {
            continue;
        }
        for sample in 0..samples_per_combo {
            let seed = record_seed(master_seed, combo_idx as u64, sample as u64);
            let spec = SceneSpec::Stroop(draw_stroop(combo, seed, params, palette)?);
            records.push(StimulusRecord {
                id: format!("stroop-{word}-{font}-{bg}-{sample:04}"),
                path: content_path(&spec, params, &palette_hash),
                spec,
            });
        }
    }
    let n = records.len();
    Ok(DatasetManifest {
        header: header(
            DatasetKind::Stroop,
            white_background,
            samples_per_combo,
            master_seed,
            params,
            palette,
            n,
        ),
        records,
    })
}

/// Closed-form record count for a corpus.
pub fn expected_count(kind: DatasetKind, white_background: bool, samples_per_combo: u32) -> usize {
    let combos = match (kind, white_background) {
        (DatasetKind::Shapes, _) => 8 * 11 * 10,
        (DatasetKind::Stroop, false) => 11 * 10 * 9,
        (DatasetKind::Stroop, true) => 10 * 9,
    };
    combos * samples_per_combo as usize
}

impl DatasetManifest {
    /// Checks counts, id/path uniqueness and the color-exclusion constraints.
    pub fn validate(&self) -> Result<()> {
        let h = &self.header;
        if h.records != self.records.len() {
            return Err(Error::Stimulus(format!(
                "header announces {} records, found {}",
                h.records,
                self.records.len()
            )));
        }
        let expected = expected_count(h.kind, h.white_background, h.samples_per_combo);
        if self.records.len() != expected {
            return Err(Error::Stimulus(format!(
                "{} records, closed form gives {expected}",
                self.records.len()
            )));
        }
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for r in &self.records {
            r.spec
                .check_colors()
                .map_err(|e| Error::Stimulus(format!("record {}: {e}", r.id)))?;
            let kind_ok = matches!(
                (&r.spec, h.kind),
                (SceneSpec::Shape(_), DatasetKind::Shapes)
                    | (SceneSpec::Stroop(_), DatasetKind::Stroop)
            );
            if !kind_ok {
                return Err(Error::Stimulus(format!(
                    "record {} has the wrong kind",
                    r.id
                )));
            }
            if h.white_background && r.spec.background() != ColorTerm::White {
                return Err(Error::Stimulus(format!(
                    "record {} is not on a white background",
                    r.id
                )));
            }
            if !ids.insert(r.id.as_str()) {
                return Err(Error::Stimulus(format!("duplicate record id {}", r.id)));
            }
            if !paths.insert(r.path.as_str()) {
                return Err(Error::Stimulus(format!("duplicate image path {}", r.path)));
            }
        }
        Ok(())
    }

    /// Same records pointing at grayscale images, with `~gray` ids.
    pub fn gray_variant(&self) -> DatasetManifest {
        let mut header = self.header.clone();
        header.variant = Variant::Gray;
        let records = self
            .records
            .iter()
            .map(|r| StimulusRecord {
                id: format!("{}{GRAY_ID_SUFFIX}", r.id),
                spec: r.spec.clone(),
                path: r
                    .path
                    .strip_suffix(".png")
                    .map(|stem| format!("{stem}.gray.png"))
                    .unwrap_or_else(|| format!("{}.gray.png", r.path)),
            })
            .collect();
        DatasetManifest { header, records }
    }

    pub fn to_ndjson(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serialize");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialize"));
            out.push('\n');
        }
        out
    }

    pub fn from_ndjson(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let first = lines
            .next()
            .ok_or_else(|| Error::Stimulus("empty manifest".into()))?;
        let header: ManifestHeader = serde_json::from_str(first)?;
        if header.format != MANIFEST_FORMAT {
            return Err(Error::Stimulus(format!(
                "unsupported manifest format {:?}",
                header.format
            )));
        }
        let records = lines
            .map(serde_json::from_str)
            .collect::<std::result::Result<Vec<StimulusRecord>, _>>()?;
        Ok(DatasetManifest { header, records })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_ndjson(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_ndjson()).map_err(|e| Error::io(path, e))
    }

    pub fn record(&self, id: &str) -> Option<&StimulusRecord> {
        self.records.iter().find(|r| r.id == id)
    }
}

/// Renders every record of `manifest` into `root`, in parallel.
pub fn write_images(manifest: &DatasetManifest, palette: &Palette, root: &Path) -> Result<()> {
    if manifest.header.palette_hash != palette.hash() {
        return Err(Error::Stimulus(format!(
            "manifest was built with palette {}, got {}",
            manifest.header.palette_hash,
            palette.hash()
        )));
    }
    let dirs: HashSet<&str> = manifest
        .records
        .iter()
        .filter_map(|r| Path::new(&r.path).parent().and_then(|p| p.to_str()))
        .collect();
    for d in dirs {
        let dir = root.join(d);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    manifest.records.par_iter().try_for_each(|r| {
        let img = render_record(r, manifest.header.variant, &manifest.header.params, palette)?;
        let path = root.join(&r.path);
        img.save_with_format(&path, image::ImageFormat::Png)
            .map_err(|e| Error::Stimulus(format!("{}: {e}", path.display())))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shapes(samples: u32, seed: u64) -> DatasetManifest {
        enumerate_shape_dataset(samples, seed, &GenParams::default(), &Palette::default()).unwrap()
    }

    fn stroop(samples: u32, seed: u64, white: bool) -> DatasetManifest {
        enumerate_stroop_dataset(
            samples,
            seed,
            white,
            &GenParams::default(),
            &Palette::default(),
        )
        .unwrap()
    }

    #[test]
    fn shape_counts_match_closed_form() {
        for n in [1, 2, 5] {
            let m = shapes(n, 3);
            assert_eq!(m.records.len(), 880 * n as usize);
            m.validate().unwrap();
        }
    }

    #[test]
    fn full_scale_shape_count() {
        assert_eq!(expected_count(DatasetKind::Shapes, false, 500), 440_000);
        assert_eq!(expected_count(DatasetKind::Stroop, false, 500), 495_000);
    }

    #[test]
    fn stroop_counts_match_closed_form() {
        for n in [1, 2, 5] {
            let m = stroop(n, 3, false);
            assert_eq!(m.records.len(), 990 * n as usize);
            m.validate().unwrap();
        }
        let white = stroop(1, 3, true);
        assert_eq!(white.records.len(), 90);
        white.validate().unwrap();
        assert!(white.records.iter().all(|r| {
            let SceneSpec::Stroop(s) = &r.spec else {
                unreachable!()
            };
            s.background == ColorTerm::White
                && s.word != ColorTerm::White
                && s.font_color != ColorTerm::White
        }));
    }

    #[test]
    fn zero_samples_is_an_error() {
        assert!(enumerate_shape_dataset(0, 1, &GenParams::default(), &Palette::default()).is_err());
        assert!(
            enumerate_stroop_dataset(0, 1, false, &GenParams::default(), &Palette::default())
                .is_err()
        );
    }

    #[test]
    fn enumeration_is_deterministic() {
        assert_eq!(shapes(1, 9).to_ndjson(), shapes(1, 9).to_ndjson());
        assert_ne!(shapes(1, 9).to_ndjson(), shapes(1, 10).to_ndjson());
    }

    #[test]
    fn white_subset_records_equal_full_corpus_records() {
        let full = stroop(2, 11, false);
        let white = stroop(2, 11, true);
        for r in &white.records {
            assert_eq!(full.record(&r.id), Some(r));
        }
    }

    #[test]
    fn more_samples_keep_earlier_records() {
        let one = shapes(1, 5);
        let two = shapes(2, 5);
        for r in &one.records {
            assert_eq!(two.record(&r.id), Some(r));
        }
    }

    #[test]
    fn shape_parameters_lie_in_range() {
        let p = GenParams::default();
        for r in &shapes(2, 1).records {
            let SceneSpec::Shape(s) = &r.spec else {
                unreachable!()
            };
            assert!((0.0..360.0).contains(&s.rotation));
            assert!((0.15..=0.6).contains(&s.scale));
            let half = s.scale / 2.0;
            for c in s.center {
                assert!(c - half >= -1e-12 && c + half <= 1.0 + 1e-12);
            }
            assert_eq!(r.spec.seed(), s.seed);
            let _ = &p;
        }
    }

    #[test]
    fn ndjson_round_trip() {
        let m = stroop(1, 2, false);
        let back = DatasetManifest::from_ndjson(&m.to_ndjson()).unwrap();
        assert_eq!(back, m);
        let g = m.gray_variant();
        let back = DatasetManifest::from_ndjson(&g.to_ndjson()).unwrap();
        assert_eq!(back.header.variant, Variant::Gray);
        assert!(back.records[0].id.ends_with(GRAY_ID_SUFFIX));
        assert!(back.records[0].path.ends_with(".gray.png"));
    }

    #[test]
    fn validate_catches_broken_constraints() {
        let mut m = shapes(1, 1);
        if let SceneSpec::Shape(s) = &mut m.records[0].spec {
            s.object_color = s.background;
        }
        assert!(m.validate().is_err());
        let mut m = shapes(1, 1);
        m.records.pop();
        assert!(m.validate().is_err());
    }
}

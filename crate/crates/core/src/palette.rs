//! The eleven basic color terms, their reference sRGB values and HSV hue.
//!
//! A [`ColorTerm`] is the identity of a color category. Its display label and
//! reference RGB live in a [`Palette`], which can be overridden from a flat
//! text file so alternate palettes (or the "grey" spelling) can be probed
//! without touching the term identities or their ordering.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One of the 11 basic color terms.
///
/// Variants are declared in alphabetical order of their canonical names and
/// the derived `Ord` is the global tie-break order used by every argmax.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorTerm {
    Black,
    Blue,
    Brown,
    Gray,
    Green,
    Orange,
    Pink,
    Purple,
    Red,
    White,
    Yellow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chromaticity {
    Chromatic,
    Achromatic,
}

impl Chromaticity {
    pub fn as_str(self) -> &'static str {
        match self {
            Chromaticity::Chromatic => "chromatic",
            Chromaticity::Achromatic => "achromatic",
        }
    }
}

pub const TERM_COUNT: usize = 11;

impl ColorTerm {
    pub const ALL: [ColorTerm; TERM_COUNT] = [
        ColorTerm::Black,
        ColorTerm::Blue,
        ColorTerm::Brown,
        ColorTerm::Gray,
        ColorTerm::Green,
        ColorTerm::Orange,
        ColorTerm::Pink,
        ColorTerm::Purple,
        ColorTerm::Red,
        ColorTerm::White,
        ColorTerm::Yellow,
    ];

    /// Position in the vocabulary order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ColorTerm> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorTerm::Black => "black",
            ColorTerm::Blue => "blue",
            ColorTerm::Brown => "brown",
            ColorTerm::Gray => "gray",
            ColorTerm::Green => "green",
            ColorTerm::Orange => "orange",
            ColorTerm::Pink => "pink",
            ColorTerm::Purple => "purple",
            ColorTerm::Red => "red",
            ColorTerm::White => "white",
            ColorTerm::Yellow => "yellow",
        }
    }

    pub fn chromaticity(self) -> Chromaticity {
        match self {
            ColorTerm::Black | ColorTerm::White | ColorTerm::Gray => Chromaticity::Achromatic,
            _ => Chromaticity::Chromatic,
        }
    }

    pub fn is_achromatic(self) -> bool {
        self.chromaticity() == Chromaticity::Achromatic
    }
}

impl fmt::Display for ColorTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorTerm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if lower == "grey" {
            return Ok(ColorTerm::Gray);
        }
        ColorTerm::ALL
            .iter()
            .copied()
            .find(|t| t.name() == lower)
            .ok_or_else(|| Error::Palette(format!("unknown color term {s:?}")))
    }
}

/// The 11 terms in vocabulary order.
pub fn vocabulary() -> [ColorTerm; TERM_COUNT] {
    ColorTerm::ALL
}

/// An 8-bit sRGB triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb([r, g, b])
    }

    /// Builds a triple from wide integers, rejecting components outside [0, 255].
    pub fn checked(r: i64, g: i64, b: i64) -> Result<Self> {
        let c = |v: i64, name: &str| {
            u8::try_from(v)
                .map_err(|_| Error::Palette(format!("{name} component {v} outside [0,255]")))
        };
        Ok(Rgb([c(r, "red")?, c(g, "green")?, c(b, "blue")?]))
    }

    pub fn r(self) -> u8 {
        self.0[0]
    }
    pub fn g(self) -> u8 {
        self.0[1]
    }
    pub fn b(self) -> u8 {
        self.0[2]
    }

    /// HSV saturation in [0, 1].
    pub fn saturation(self) -> f64 {
        let max = *self.0.iter().max().unwrap() as f64;
        let min = *self.0.iter().min().unwrap() as f64;
        if max == 0.0 {
            0.0
        } else {
            (max - min) / max
        }
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for Rgb {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Palette(format!("expected \"R,G,B\", got {s:?}")));
        }
        let mut v = [0i64; 3];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::Palette(format!("bad color component {p:?}")))?;
        }
        Rgb::checked(v[0], v[1], v[2])
    }
}

/// HSV hue in degrees [0, 360), or `None` for zero-saturation pixels.
pub fn hue_of(rgb: Rgb) -> Option<f64> {
    let [r, g, b] = rgb.0.map(f64::from);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return None;
    }
    let sector = if max == r {
        ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let h = (sector * 60.0).rem_euclid(360.0);
    // rem_euclid can return 360.0 for tiny negative inputs
    Some(if h >= 360.0 { 0.0 } else { h })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteEntry {
    pub label: String,
    pub rgb: Rgb,
}

/// Display labels and reference RGB values for every term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Palette {
    entries: Vec<PaletteEntry>,
}

impl Default for Palette {
    fn default() -> Self {
        let rgb = |t: ColorTerm| match t {
            ColorTerm::Black => Rgb::new(0, 0, 0),
            ColorTerm::White => Rgb::new(255, 255, 255),
            ColorTerm::Gray => Rgb::new(128, 128, 128),
            ColorTerm::Red => Rgb::new(255, 0, 0),
            ColorTerm::Green => Rgb::new(0, 128, 0),
            ColorTerm::Blue => Rgb::new(0, 0, 255),
            ColorTerm::Yellow => Rgb::new(255, 255, 0),
            ColorTerm::Orange => Rgb::new(255, 165, 0),
            ColorTerm::Purple => Rgb::new(128, 0, 128),
            ColorTerm::Pink => Rgb::new(255, 192, 203),
            ColorTerm::Brown => Rgb::new(139, 69, 19),
        };
        Palette {
            entries: ColorTerm::ALL
                .iter()
                .map(|&t| PaletteEntry {
                    label: t.name().to_string(),
                    rgb: rgb(t),
                })
                .collect(),
        }
    }
}

impl Palette {
    pub fn rgb(&self, term: ColorTerm) -> Rgb {
        self.entries[term.index()].rgb
    }

    pub fn label(&self, term: ColorTerm) -> &str {
        &self.entries[term.index()].label
    }

    pub fn entries(&self) -> impl Iterator<Item = (ColorTerm, &PaletteEntry)> {
        ColorTerm::ALL.iter().copied().zip(self.entries.iter())
    }

    /// Resolves a display label or canonical name to its term.
    pub fn term_for_label(&self, label: &str) -> Option<ColorTerm> {
        let wanted = label.trim();
        self.entries()
            .find(|(_, e)| e.label.eq_ignore_ascii_case(wanted))
            .map(|(t, _)| t)
            .or_else(|| wanted.parse().ok())
    }

    /// Applies a flat override file on top of the default palette.
    ///
    /// Each non-blank line is `term = R,G,B` or `term.label = text`; `#`
    /// starts a comment.
    pub fn from_override_text(text: &str) -> Result<Self> {
        let mut palette = Palette::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Palette(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            if let Some(term) = key.strip_suffix(".label") {
                let term: ColorTerm = term.parse()?;
                if value.is_empty() || value.contains(char::is_whitespace) {
                    return Err(Error::Palette(format!(
                        "line {}: label must be a single word",
                        lineno + 1
                    )));
                }
                palette.entries[term.index()].label = value.to_string();
            } else {
                let term: ColorTerm = key.parse()?;
                palette.entries[term.index()].rgb = value.parse()?;
            }
        }
        palette.validate()?;
        Ok(palette)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_override_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (ta, a)) in self.entries().enumerate() {
            if ta.is_achromatic() && !(a.rgb.r() == a.rgb.g() && a.rgb.g() == a.rgb.b()) {
                return Err(Error::Palette(format!(
                    "achromatic term {ta} must have r=g=b, got {}",
                    a.rgb
                )));
            }
            for (tb, b) in self.entries().skip(i + 1) {
                if a.rgb == b.rgb {
                    return Err(Error::Palette(format!("{ta} and {tb} share RGB {}", a.rgb)));
                }
                if a.label.eq_ignore_ascii_case(&b.label) {
                    return Err(Error::Palette(format!(
                        "{ta} and {tb} share label {:?}",
                        a.label
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; the hash of this string identifies the palette
    /// in every artifact header.
    pub fn canonical_text(&self) -> String {
        self.entries()
            .map(|(t, e)| format!("{t}={}:{}\n", e.label, e.rgb))
            .collect()
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vocabulary_has_eleven_terms_three_achromatic() {
        assert_eq!(vocabulary().len(), 11);
        let achromatic: Vec<_> = vocabulary()
            .into_iter()
            .filter(|t| t.is_achromatic())
            .collect();
        assert_eq!(
            achromatic,
            vec![ColorTerm::Black, ColorTerm::Gray, ColorTerm::White]
        );
        assert_eq!(vocabulary(), vocabulary());
    }

    #[test]
    fn vocabulary_is_alphabetical_and_unique() {
        let names: Vec<_> = vocabulary().iter().map(|t| t.name()).collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(names, sorted);
        for (i, t) in vocabulary().iter().enumerate() {
            assert_eq!(t.index(), i);
        }
    }

    #[test]
    fn default_palette_is_valid() {
        let p = Palette::default();
        p.validate().unwrap();
        for t in vocabulary() {
            if t.is_achromatic() {
                let c = p.rgb(t);
                assert!(c.r() == c.g() && c.g() == c.b());
            }
        }
        assert_eq!(p.rgb(ColorTerm::Brown), Rgb::new(139, 69, 19));
    }

    #[test]
    fn hue_examples() {
        assert_eq!(hue_of(Rgb::new(255, 0, 0)), Some(0.0));
        assert_eq!(hue_of(Rgb::new(0, 255, 0)), Some(120.0));
        assert_eq!(hue_of(Rgb::new(0, 0, 255)), Some(240.0));
        assert_eq!(hue_of(Rgb::new(255, 0, 255)), Some(300.0));
        assert_eq!(hue_of(Rgb::new(128, 128, 128)), None);
        assert_eq!(hue_of(Rgb::new(0, 0, 0)), None);
    }

    #[test]
    fn out_of_range_components_are_rejected() {
        assert!(Rgb::checked(256, 0, 0).is_err());
        assert!(Rgb::checked(0, -1, 0).is_err());
        assert!("1,2".parse::<Rgb>().is_err());
        assert_eq!("1, 2 ,3".parse::<Rgb>().unwrap(), Rgb::new(1, 2, 3));
    }

    #[test]
    fn override_file_changes_rgb_and_label() {
        let p = Palette::from_override_text(
            "# alternate palette\nred = 200,10,10\ngray.label = grey\ngray = 120,120,120\n",
        )
        .unwrap();
        assert_eq!(p.rgb(ColorTerm::Red), Rgb::new(200, 10, 10));
        assert_eq!(p.label(ColorTerm::Gray), "grey");
        assert_eq!(p.term_for_label("grey"), Some(ColorTerm::Gray));
        assert_eq!(p.term_for_label("GRAY"), Some(ColorTerm::Gray));
        assert_ne!(p.hash(), Palette::default().hash());
    }

    #[test]
    fn override_rejects_bad_palettes() {
        assert!(Palette::from_override_text("gray = 10,20,30").is_err());
        assert!(Palette::from_override_text("red = 0,0,255").is_err());
        assert!(Palette::from_override_text("teal = 0,128,128").is_err());
        assert!(Palette::from_override_text("red 1,2,3").is_err());
    }

    proptest! {
        // Moving each channel value one slot to the right (r→g, g→b, b→r)
        // rotates the hue by +120°.
        #[test]
        fn hue_rotates_with_channel_permutation(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            let rgb = Rgb::new(r, g, b);
            match hue_of(rgb) {
                None => prop_assert_eq!(hue_of(Rgb::new(b, r, g)), None),
                Some(h) => {
                    let rotated = hue_of(Rgb::new(b, r, g)).unwrap();
                    let expected = (h + 120.0).rem_euclid(360.0);
                    let diff = (rotated - expected).rem_euclid(360.0);
                    prop_assert!(diff < 1e-9 || 360.0 - diff < 1e-9, "{} vs {}", rotated, expected);
                }
            }
        }

        #[test]
        fn hue_in_range(r in 0u8..=255, g in 0u8..=255, b in 0u8..=255) {
            if let Some(h) = hue_of(Rgb::new(r, g, b)) {
                prop_assert!((0.0..360.0).contains(&h));
            }
        }
    }
}

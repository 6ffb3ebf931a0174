use std::collections::{BTreeMap, HashMap};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::{categorize_outcome, Outcome, PredictionRecord};
use crate::error::{Error, Result};
use crate::palette::{Chromaticity, ColorTerm};
use crate::stimulus::{DatasetManifest, SceneSpec, StimulusRecord};

/// Counts behind one chromaticity cell. Ratios are derived on demand so that
/// merging partial tables stays exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCounts {
    pub background: u64,
    pub object: u64,
    pub other: u64,
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.background + self.object + self.other
    }

    /// (background, object, remainder) ratios, `None` for an empty cell.
    pub fn ratios(&self) -> Option<[f64; 3]> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let n = n as f64;
        let b = self.background as f64 / n;
        let o = self.object as f64 / n;
        Some([b, o, self.other as f64 / n])
    }
}

impl AddAssign for CellCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.background += rhs.background;
        self.object += rhs.object;
        self.other += rhs.other;
    }
}

fn chroma_index(c: Chromaticity) -> usize {
    match c {
        Chromaticity::Achromatic => 0,
        Chromaticity::Chromatic => 1,
    }
}

/// 2x2 table keyed by (background chromaticity, object chromaticity);
/// index 0 is achromatic and 1 chromatic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChromaticityTable {
    pub cells: [[CellCounts; 2]; 2],
}

impl ChromaticityTable {
    pub const CLASSES: [Chromaticity; 2] = [Chromaticity::Achromatic, Chromaticity::Chromatic];

    pub fn cell(&self, background: Chromaticity, object: Chromaticity) -> &CellCounts {
        &self.cells[chroma_index(background)][chroma_index(object)]
    }

    pub fn record(&mut self, record: &StimulusRecord, outcome: Outcome) {
        let object = record.spec.foreground();
        let bg = record.spec.background();
        let cell =
            &mut self.cells[chroma_index(bg.chromaticity())][chroma_index(object.chromaticity())];
        match outcome {
            Outcome::BackgroundColor => cell.background += 1,
            Outcome::ObjectOrFontColor => cell.object += 1,
            _ => cell.other += 1,
        }
    }

    pub fn merge(&mut self, other: &ChromaticityTable) {
        for (row, orow) in self.cells.iter_mut().zip(&other.cells) {
            for (c, oc) in row.iter_mut().zip(orow) {
                *c += *oc;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.cells.iter().flatten().map(CellCounts::total).sum()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StroopCounts {
    pub correct: u64,
    pub written: u64,
    pub background: u64,
    pub none: u64,
}

impl StroopCounts {
    pub fn total(&self) -> u64 {
        self.correct + self.written + self.background + self.none
    }

    /// (correct font, written, background, none) ratios.
    pub fn ratios(&self) -> Option<[f64; 4]> {
        let n = self.total();
        if n == 0 {
            return None;
        }
        let n = n as f64;
        Some([
            self.correct as f64 / n,
            self.written as f64 / n,
            self.background as f64 / n,
            self.none as f64 / n,
        ])
    }
}

impl AddAssign for StroopCounts {
    fn add_assign(&mut self, rhs: Self) {
        self.correct += rhs.correct;
        self.written += rhs.written;
        self.background += rhs.background;
        self.none += rhs.none;
    }
}

/// Per-font-color outcome counts; the global row is the sum of all rows.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StroopTable {
    pub rows: BTreeMap<ColorTerm, StroopCounts>,
}

impl StroopTable {
    pub fn record(&mut self, font: ColorTerm, outcome: Outcome) {
        let row = self.rows.entry(font).or_default();
        match outcome {
            Outcome::ObjectOrFontColor => row.correct += 1,
            Outcome::WrittenColor => row.written += 1,
            Outcome::BackgroundColor => row.background += 1,
            Outcome::NoneOfInput | Outcome::Incorrect => row.none += 1,
        }
    }

    pub fn merge(&mut self, other: &StroopTable) {
        for (term, counts) in &other.rows {
            *self.rows.entry(*term).or_default() += *counts;
        }
    }

    pub fn global(&self) -> StroopCounts {
        let mut g = StroopCounts::default();
        for c in self.rows.values() {
            g += *c;
        }
        g
    }
}

fn index_manifest(manifest: &DatasetManifest) -> HashMap<&str, &StimulusRecord> {
    manifest
        .records
        .iter()
        .map(|r| (r.id.as_str(), r))
        .collect()
}

fn lookup<'a>(
    index: &HashMap<&str, &'a StimulusRecord>,
    p: &PredictionRecord,
) -> Result<&'a StimulusRecord> {
    index
        .get(p.record_id.as_str())
        .copied()
        .ok_or_else(|| Error::Probe(format!("prediction for unknown record {}", p.record_id)))
}

/// Outcomes are re-derived from the predicted label and the manifest record,
/// so stale or hand-edited outcome fields cannot skew the table.
pub fn aggregate_chromaticity(
    predictions: &[PredictionRecord],
    manifest: &DatasetManifest,
) -> Result<ChromaticityTable> {
    let index = index_manifest(manifest);
    let mut table = ChromaticityTable::default();
    for p in predictions {
        let r = lookup(&index, p)?;
        table.record(r, categorize_outcome(p.predicted, r));
    }
    Ok(table)
}

pub fn aggregate_stroop(
    predictions: &[PredictionRecord],
    manifest: &DatasetManifest,
) -> Result<StroopTable> {
    let index = index_manifest(manifest);
    let mut table = StroopTable::default();
    for p in predictions {
        let r = lookup(&index, p)?;
        let SceneSpec::Stroop(s) = &r.spec else {
            return Err(Error::Probe(format!(
                "record {} is not a Stroop scene",
                r.id
            )));
        };
        table.record(s.font_color, categorize_outcome(p.predicted, r));
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::palette::Palette;
    use crate::stimulus::{enumerate_shape_dataset, GenParams};

    fn pred(r: &StimulusRecord, term: ColorTerm) -> PredictionRecord {
        PredictionRecord {
            record_id: r.id.clone(),
            template_id: "t".into(),
            scores: BTreeMap::new(),
            predicted: term,
            outcome: categorize_outcome(term, r),
        }
    }

    #[test]
    fn all_background_predictions() {
        let m = enumerate_shape_dataset(1, 1, &GenParams::default(), &Palette::default()).unwrap();
        let preds: Vec<_> = m
            .records
            .iter()
            .map(|r| pred(r, r.spec.background()))
            .collect();
        let t = aggregate_chromaticity(&preds, &m).unwrap();
        for bg in ChromaticityTable::CLASSES {
            for obj in ChromaticityTable::CLASSES {
                assert_eq!(t.cell(bg, obj).ratios(), Some([1.0, 0.0, 0.0]));
            }
        }
        assert_eq!(t.total(), 880);
    }

    #[test]
    fn four_hand_built_predictions() {
        let m = enumerate_shape_dataset(1, 1, &GenParams::default(), &Palette::default()).unwrap();
        let cell: Vec<_> = m
            .records
            .iter()
            .filter(|r| r.spec.background().is_achromatic() && !r.spec.foreground().is_achromatic())
            .take(4)
            .collect();
        let third = |r: &StimulusRecord| {
            *ColorTerm::ALL
                .iter()
                .find(|&&t| t != r.spec.background() && t != r.spec.foreground())
                .unwrap()
        };
        let preds = vec![
            pred(cell[0], cell[0].spec.background()),
            pred(cell[1], cell[1].spec.background()),
            pred(cell[2], cell[2].spec.foreground()),
            pred(cell[3], third(cell[3])),
        ];
        let t = aggregate_chromaticity(&preds, &m).unwrap();
        let c = t.cell(Chromaticity::Achromatic, Chromaticity::Chromatic);
        assert_eq!(c.ratios(), Some([0.5, 0.25, 0.25]));
        assert_eq!(
            t.cell(Chromaticity::Chromatic, Chromaticity::Chromatic)
                .ratios(),
            None
        );
    }

    #[test]
    fn unknown_record_rejected() {
        let m = enumerate_shape_dataset(1, 1, &GenParams::default(), &Palette::default()).unwrap();
        let mut p = pred(&m.records[0], ColorTerm::Red);
        p.record_id = "nope".into();
        assert!(aggregate_chromaticity(&[p], &m).is_err());
    }

    #[test]
    fn stroop_rejects_shape_records() {
        let m = enumerate_shape_dataset(1, 1, &GenParams::default(), &Palette::default()).unwrap();
        let p = pred(&m.records[0], ColorTerm::Red);
        assert!(aggregate_stroop(&[p], &m).is_err());
    }
}

//! CSV tables and SVG figures for probe results and neuron analyses.
//!
//! Every artifact starts with a provenance block: `#` comment lines in CSV,
//! an XML comment in SVG. Counts are written next to percentages so that a
//! CSV can be parsed back into the exact table it came from.

mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activation::{HueHistogram, LayerDistribution, NeuronProfile, TypeBucket};
use crate::error::{Error, Result};
use crate::palette::{Chromaticity, ColorTerm};
use crate::probe::{CellCounts, ChromaticityTable, StroopCounts, StroopTable};

pub use svg::{histogram_svg, stacked_bar_svg, Bar, Segment};

pub const NO_DATA: &str = "n/a";
pub const GLOBAL_ROW: &str = "global";

/// Ordered key/value pairs echoed at the top of every artifact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance(pub Vec<(String, String)>);

impl Provenance {
    pub fn new() -> Self {
        Provenance(Vec::new())
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.0.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    fn csv_lines(&self) -> String {
        let mut out = String::from("# colorprobe\n");
        for (k, v) in &self.0 {
            out.push_str(&format!("# {k}: {}\n", v.replace('\n', " ")));
        }
        out
    }
}

/// Percentage with two decimals, or `n/a` when undefined.
pub fn fmt_pct(ratio: Option<f64>) -> String {
    match ratio {
        Some(r) => format!("{:.2}", r * 100.0),
        None => NO_DATA.to_string(),
    }
}

fn write_csv(prov: &Provenance, header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    let body = String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf8 csv");
    prov.csv_lines() + &body
}

fn read_csv(text: &str) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    r.records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::Report(format!("csv: {e}")))
}

fn count_field(rec: &csv::StringRecord, i: usize) -> Result<u64> {
    let s = rec
        .get(i)
        .ok_or_else(|| Error::Report(format!("csv row has no column {i}")))?;
    s.parse()
        .map_err(|_| Error::Report(format!("bad count {s:?} in column {i}")))
}

fn parse_chroma(s: &str) -> Result<Chromaticity> {
    match s {
        "achromatic" => Ok(Chromaticity::Achromatic),
        "chromatic" => Ok(Chromaticity::Chromatic),
        _ => Err(Error::Report(format!("unknown chromaticity {s:?}"))),
    }
}

fn chroma_idx(c: Chromaticity) -> usize {
    match c {
        Chromaticity::Achromatic => 0,
        Chromaticity::Chromatic => 1,
    }
}

const CHROMA_HEADER: [&str; 9] = [
    "background",
    "object",
    "n",
    "background_count",
    "object_count",
    "other_count",
    "background_pct",
    "object_pct",
    "other_pct",
];

/// Long-form chromaticity table, one row per (background, object) cell.
pub fn chromaticity_csv(table: &ChromaticityTable, prov: &Provenance) -> String {
    let mut rows = Vec::new();
    for bg in ChromaticityTable::CLASSES {
        for obj in ChromaticityTable::CLASSES {
            let c = table.cell(bg, obj);
            let r = c.ratios();
            rows.push(vec![
                bg.as_str().to_string(),
                obj.as_str().to_string(),
                c.total().to_string(),
                c.background.to_string(),
                c.object.to_string(),
                c.other.to_string(),
                fmt_pct(r.map(|r| r[0])),
                fmt_pct(r.map(|r| r[1])),
                fmt_pct(r.map(|r| r[2])),
            ]);
        }
    }
    write_csv(prov, &CHROMA_HEADER, rows)
}

/// 2x2 layout: background classes down, object classes across, each cell
/// `background% / object%`.
pub fn chromaticity_pivot_csv(table: &ChromaticityTable, prov: &Provenance) -> String {
    let rows = ChromaticityTable::CLASSES
        .iter()
        .map(|&bg| {
            let mut row = vec![bg.as_str().to_string()];
            for obj in ChromaticityTable::CLASSES {
                row.push(match table.cell(bg, obj).ratios() {
                    Some(r) => format!("{} / {}", fmt_pct(Some(r[0])), fmt_pct(Some(r[1]))),
                    None => NO_DATA.to_string(),
                });
            }
            row
        })
        .collect();
    write_csv(
        prov,
        &["background \\ object", "achromatic", "chromatic"],
        rows,
    )
}

pub fn parse_chromaticity_csv(text: &str) -> Result<ChromaticityTable> {
    let mut t = ChromaticityTable::default();
    for rec in read_csv(text)? {
        let bg = parse_chroma(rec.get(0).unwrap_or(""))?;
        let obj = parse_chroma(rec.get(1).unwrap_or(""))?;
        t.cells[chroma_idx(bg)][chroma_idx(obj)] = CellCounts {
            background: count_field(&rec, 3)?,
            object: count_field(&rec, 4)?,
            other: count_field(&rec, 5)?,
        };
    }
    Ok(t)
}

const STROOP_HEADER: [&str; 10] = [
    "font_color",
    "n",
    "correct_count",
    "written_count",
    "background_count",
    "none_count",
    "correct_pct",
    "written_pct",
    "background_pct",
    "none_pct",
];

fn stroop_row(name: &str, c: &StroopCounts) -> Vec<String> {
    let r = c.ratios();
    let mut row = vec![
        name.to_string(),
        c.total().to_string(),
        c.correct.to_string(),
        c.written.to_string(),
        c.background.to_string(),
        c.none.to_string(),
    ];
    row.extend((0..4).map(|i| fmt_pct(r.map(|r| r[i]))));
    row
}

/// One row per font color present, then the global row.
pub fn stroop_csv(table: &StroopTable, prov: &Provenance) -> String {
    let mut rows: Vec<_> = table
        .rows
        .iter()
        .map(|(term, c)| stroop_row(term.name(), c))
        .collect();
    rows.push(stroop_row(GLOBAL_ROW, &table.global()));
    write_csv(prov, &STROOP_HEADER, rows)
}

pub fn parse_stroop_csv(text: &str) -> Result<StroopTable> {
    let mut t = StroopTable::default();
    for rec in read_csv(text)? {
        let name = rec.get(0).unwrap_or("");
        if name == GLOBAL_ROW {
            continue;
        }
        let term: ColorTerm = name
            .parse()
            .map_err(|_| Error::Report(format!("unknown font color {name:?}")))?;
        t.rows.insert(
            term,
            StroopCounts {
                correct: count_field(&rec, 2)?,
                written: count_field(&rec, 3)?,
                background: count_field(&rec, 4)?,
                none: count_field(&rec, 5)?,
            },
        );
    }
    Ok(t)
}

/// Per-layer type distribution: counts for every bucket, then percentages.
pub fn layer_types_csv(dists: &[LayerDistribution], prov: &Provenance) -> String {
    let mut header = vec!["layer".to_string(), "total".to_string()];
    header.extend(
        TypeBucket::ALL
            .iter()
            .map(|b| format!("{}_count", b.name())),
    );
    header.extend(TypeBucket::ALL.iter().map(|b| format!("{}_pct", b.name())));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = dists
        .iter()
        .map(|d| {
            let mut row = vec![d.layer.clone(), d.total.to_string()];
            row.extend(TypeBucket::ALL.iter().map(|&b| d.count(b).to_string()));
            row.extend(TypeBucket::ALL.iter().map(|&b| fmt_pct(d.ratio(b))));
            row
        })
        .collect();
    write_csv(prov, &header, rows)
}

pub fn parse_layer_types_csv(text: &str) -> Result<Vec<LayerDistribution>> {
    read_csv(text)?
        .iter()
        .map(|rec| {
            let counts = TypeBucket::ALL
                .iter()
                .enumerate()
                .map(|(i, &b)| Ok((b, count_field(rec, 2 + i)? as usize)))
                .collect::<Result<BTreeMap<_, _>>>()?;
            Ok(LayerDistribution {
                layer: rec.get(0).unwrap_or("").to_string(),
                total: count_field(rec, 1)? as usize,
                counts,
            })
        })
        .collect()
}

pub fn layer_types_bars(dists: &[LayerDistribution]) -> Vec<Bar> {
    dists
        .iter()
        .map(|d| Bar {
            label: d.layer.clone(),
            segments: TypeBucket::ALL
                .iter()
                .filter_map(|&b| {
                    d.ratio(b).map(|r| Segment {
                        name: b.name().to_string(),
                        pct: r * 100.0,
                    })
                })
                .collect(),
        })
        .collect()
}

/// Hue histogram with an optional reference distribution in a second column.
pub fn hue_histogram_csv(
    hist: &HueHistogram,
    reference: Option<&HueHistogram>,
    prov: &Provenance,
) -> String {
    let width = 360.0 / hist.bins() as f64;
    let rows = hist
        .edges()
        .iter()
        .enumerate()
        .map(|(i, &lo)| {
            let pct = |h: &HueHistogram| fmt_pct((!h.is_empty()).then(|| h.mass[i]));
            vec![
                format!("{lo:.2}"),
                format!("{:.2}", lo + width),
                pct(hist),
                reference.map(pct).unwrap_or_else(|| NO_DATA.to_string()),
            ]
        })
        .collect();
    write_csv(
        prov,
        &["hue_start", "hue_end", "pct", "reference_pct"],
        rows,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectivityBand {
    Low,
    Medium,
    High,
}

impl SelectivityBand {
    pub const ALL: [SelectivityBand; 3] = [Self::Low, Self::Medium, Self::High];
    pub const MEDIUM_FROM: f64 = 0.25;
    pub const HIGH_FROM: f64 = 0.5;

    pub fn of(alpha: f64) -> SelectivityBand {
        if alpha >= Self::HIGH_FROM {
            Self::High
        } else if alpha >= Self::MEDIUM_FROM {
            Self::Medium
        } else {
            Self::Low
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Medium => "medium",
            Self::High => "high",
        }
    }
}

/// Band counts of one layer; neurons without a defined index are kept apart.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BandCounts {
    pub layer: String,
    pub counts: [usize; 3],
    pub undefined: usize,
}

impl BandCounts {
    pub fn defined(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn ratio(&self, band: SelectivityBand) -> Option<f64> {
        let n = self.defined();
        (n > 0).then(|| self.counts[band as usize] as f64 / n as f64)
    }
}

/// Layers in first-seen order.
pub fn selectivity_bands(profiles: &[NeuronProfile]) -> Vec<BandCounts> {
    let mut out: Vec<BandCounts> = Vec::new();
    for p in profiles {
        let idx = match out.iter().position(|b| b.layer == p.layer) {
            Some(i) => i,
            None => {
                out.push(BandCounts {
                    layer: p.layer.clone(),
                    ..Default::default()
                });
                out.len() - 1
            }
        };
        match p.color_selectivity {
            Some(a) => out[idx].counts[SelectivityBand::of(a) as usize] += 1,
            None => out[idx].undefined += 1,
        }
    }
    out
}

pub fn selectivity_bands_csv(bands: &[BandCounts], prov: &Provenance) -> String {
    let rows = bands
        .iter()
        .map(|b| {
            let mut row = vec![
                b.layer.clone(),
                b.defined().to_string(),
                b.undefined.to_string(),
            ];
            row.extend(b.counts.iter().map(|c| c.to_string()));
            row.extend(SelectivityBand::ALL.iter().map(|&s| fmt_pct(b.ratio(s))));
            row
        })
        .collect();
    write_csv(
        prov,
        &[
            "layer",
            "n",
            "undefined",
            "low_count",
            "medium_count",
            "high_count",
            "low_pct",
            "medium_pct",
            "high_pct",
        ],
        rows,
    )
}

pub fn selectivity_bars(bands: &[BandCounts]) -> Vec<Bar> {
    bands
        .iter()
        .map(|b| Bar {
            label: b.layer.clone(),
            segments: SelectivityBand::ALL
                .iter()
                .filter_map(|&s| {
                    b.ratio(s).map(|r| Segment {
                        name: s.name().to_string(),
                        pct: r * 100.0,
                    })
                })
                .collect(),
        })
        .collect()
}

pub fn stroop_bars(table: &StroopTable) -> Vec<Bar> {
    let names = ["correct", "written", "background", "none"];
    let bar = |label: &str, c: &StroopCounts| Bar {
        label: label.to_string(),
        segments: c
            .ratios()
            .map(|r| {
                names
                    .iter()
                    .zip(r)
                    .map(|(n, r)| Segment {
                        name: n.to_string(),
                        pct: r * 100.0,
                    })
                    .collect()
            })
            .unwrap_or_default(),
    };
    let mut bars: Vec<Bar> = table.rows.iter().map(|(t, c)| bar(t.name(), c)).collect();
    bars.push(bar(GLOBAL_ROW, &table.global()));
    bars
}

pub fn chromaticity_bars(table: &ChromaticityTable) -> Vec<Bar> {
    let mut bars = Vec::new();
    for bg in ChromaticityTable::CLASSES {
        for obj in ChromaticityTable::CLASSES {
            let segments = table
                .cell(bg, obj)
                .ratios()
                .map(|r| {
                    ["background", "object", "other"]
                        .iter()
                        .zip(r)
                        .map(|(n, r)| Segment {
                            name: n.to_string(),
                            pct: r * 100.0,
                        })
                        .collect()
                })
                .unwrap_or_default();
            bars.push(Bar {
                label: format!("bg {} / obj {}", bg.as_str(), obj.as_str()),
                segments,
            });
        }
    }
    bars
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::NeuronType;

    fn prov() -> Provenance {
        Provenance::new()
            .with("seed", 7)
            .with("palette_hash", "abc")
    }

    fn sample_chroma() -> ChromaticityTable {
        let mut t = ChromaticityTable::default();
        t.cells[0][1] = CellCounts {
            background: 2,
            object: 1,
            other: 1,
        };
        t.cells[1][1] = CellCounts {
            background: 0,
            object: 3,
            other: 0,
        };
        t
    }

    #[test]
    fn chromaticity_round_trip_and_layout() {
        let t = sample_chroma();
        let csv = chromaticity_csv(&t, &prov());
        assert!(csv.starts_with("# colorprobe\n# seed: 7\n"));
        assert_eq!(parse_chromaticity_csv(&csv).unwrap(), t);
        assert!(csv.contains("achromatic,chromatic,4,2,1,1,50.00,25.00,25.00"));
        assert!(csv.contains("achromatic,achromatic,0,0,0,0,n/a,n/a,n/a"));
        let pivot = chromaticity_pivot_csv(&t, &prov());
        let body: Vec<&str> = pivot.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 3);
        assert_eq!(body[1], "achromatic,n/a,50.00 / 25.00");
    }

    #[test]
    fn stroop_rows_and_round_trip() {
        let mut t = StroopTable::default();
        t.rows.insert(
            ColorTerm::Red,
            StroopCounts {
                correct: 1,
                written: 2,
                background: 0,
                none: 1,
            },
        );
        t.rows.insert(
            ColorTerm::Blue,
            StroopCounts {
                correct: 0,
                written: 3,
                background: 0,
                none: 0,
            },
        );
        let csv = stroop_csv(&t, &prov());
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 1 + 2 + 1);
        assert!(body[1].starts_with("blue,"));
        assert_eq!(body[3], "global,7,1,5,0,1,14.29,71.43,0.00,14.29");
        assert_eq!(parse_stroop_csv(&csv).unwrap(), t);
    }

    #[test]
    fn empty_stroop_table_reports_no_data() {
        let csv = stroop_csv(&StroopTable::default(), &prov());
        assert!(csv.ends_with("global,0,0,0,0,0,n/a,n/a,n/a,n/a\n"));
    }

    #[test]
    fn layer_types_round_trip() {
        let typed = vec![
            ("l1", NeuronType::NotActivated),
            ("l1", NeuronType::Color(ColorTerm::Red)),
            ("l2", NeuronType::AnyWord),
            ("l1", NeuronType::Color(ColorTerm::White)),
        ];
        let d = crate::activation::layer_type_distribution(typed.iter().map(|(l, t)| (*l, *t)));
        let csv = layer_types_csv(&d, &prov());
        assert_eq!(parse_layer_types_csv(&csv).unwrap(), d);
        for bar in layer_types_bars(&d) {
            let sum: f64 = bar.segments.iter().map(|s| s.pct).sum();
            assert!((sum - 100.0).abs() < 1e-9);
        }
    }

    #[test]
    fn bands() {
        assert_eq!(SelectivityBand::of(0.0), SelectivityBand::Low);
        assert_eq!(SelectivityBand::of(0.25), SelectivityBand::Medium);
        assert_eq!(SelectivityBand::of(0.5), SelectivityBand::High);
        assert_eq!(SelectivityBand::of(1.0), SelectivityBand::High);
    }

    #[test]
    fn hue_csv_has_one_row_per_bin() {
        let h = HueHistogram::from_hues([10.0, 200.0, 350.0], 12).unwrap();
        let csv = hue_histogram_csv(&h, None, &prov());
        let body: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(body.len(), 13);
        assert_eq!(body[1], "0.00,30.00,33.33,n/a");
        let empty = HueHistogram::from_hues([], 4).unwrap();
        assert!(hue_histogram_csv(&empty, None, &prov()).contains("0.00,90.00,n/a,n/a"));
    }
}

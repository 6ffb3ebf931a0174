//! Bundled glyph sources for Stroop words.
//!
//! Three uppercase Latin faces are compiled into the crate so rendered words
//! never depend on system fonts:
//!
//! * `0` a 5×7 block bitmap face,
//! * `1` a thin single-stroke vector face,
//! * `2` the same strokes drawn heavy and oblique.

use crate::error::{Error, Result};

pub const FONT_COUNT: usize = 3;

pub fn font_name(font_id: usize) -> Option<&'static str> {
    ["block-5x7", "stroke-thin", "stroke-bold-oblique"]
        .get(font_id)
        .copied()
}

/// Drawing primitive in pixel coordinates relative to the text box origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Prim {
    Rect {
        x0: f64,
        y0: f64,
        x1: f64,
        y1: f64,
    },
    /// Segment swept by a round pen of half-width `hw`.
    Capsule {
        ax: f64,
        ay: f64,
        bx: f64,
        by: f64,
        hw: f64,
    },
}

impl Prim {
    pub(crate) fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Prim::Rect { x0, y0, x1, y1 } => (x0, y0, x1, y1),
            Prim::Capsule { ax, ay, bx, by, hw } => (
                ax.min(bx) - hw,
                ay.min(by) - hw,
                ax.max(bx) + hw,
                ay.max(by) + hw,
            ),
        }
    }

    pub(crate) fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Prim::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Prim::Capsule { ax, ay, bx, by, hw } => {
                let (dx, dy) = (bx - ax, by - ay);
                let len2 = dx * dx + dy * dy;
                let t = if len2 == 0.0 {
                    0.0
                } else {
                    (((x - ax) * dx + (y - ay) * dy) / len2).clamp(0.0, 1.0)
                };
                let (px, py) = (ax + t * dx - x, ay + t * dy - y);
                px * px + py * py <= hw * hw
            }
        }
    }
}

#[derive(Clone, Debug)]
pub(crate) struct TextLayout {
    pub width: f64,
    pub height: f64,
    pub prims: Vec<Prim>,
}

/// Lays out `text` (A–Z only) with cap height `size` pixels.
pub(crate) fn layout(font_id: usize, text: &str, size: f64) -> Result<TextLayout> {
    if !(size > 0.0) {
        return Err(Error::Render(format!("font size {size} must be positive")));
    }
    if text.is_empty() {
        return Err(Error::Render("empty text".into()));
    }
    if let Some(c) = text.chars().find(|c| !c.is_ascii_uppercase()) {
        return Err(Error::Render(format!(
            "character {c:?} has no glyph in the bundled faces"
        )));
    }
    match font_id {
        0 => Ok(layout_bitmap(text, size)),
        1 => Ok(layout_stroke(text, size, 0.09, 0.0)),
        2 => Ok(layout_stroke(text, size, 0.15, 0.22)),
        _ => Err(Error::Render(format!(
            "font_id {font_id} out of range (have {FONT_COUNT})"
        ))),
    }
}

fn layout_bitmap(text: &str, size: f64) -> TextLayout {
    let cell = size / 7.0;
    let n = text.len() as f64;
    let mut prims = Vec::new();
    for (i, c) in text.bytes().enumerate() {
        let x_off = i as f64 * 6.0 * cell;
        for (row, bits) in BITMAP[(c - b'A') as usize].iter().enumerate() {
            for col in 0..5 {
                if bits & (0b10000 >> col) != 0 {
                    let x0 = x_off + col as f64 * cell;
                    let y0 = row as f64 * cell;
                    prims.push(Prim::Rect {
                        x0,
                        y0,
                        x1: x0 + cell,
                        y1: y0 + cell,
                    });
                }
            }
        }
    }
    TextLayout {
        width: (6.0 * n - 1.0) * cell,
        height: size,
        prims,
    }
}

// Stroke glyphs live on a 4×6 grid, y pointing down.
const STROKE_W: f64 = 4.0;
const STROKE_H: f64 = 6.0;
const STROKE_GAP: f64 = 1.3;

fn layout_stroke(text: &str, size: f64, weight: f64, slant: f64) -> TextLayout {
    let unit = size / STROKE_H;
    let hw = weight * size;
    let n = text.len() as f64;
    let shear_extra = slant * size;
    let mut prims = Vec::new();
    for (i, c) in text.bytes().enumerate() {
        let x_off = hw + i as f64 * (STROKE_W + STROKE_GAP) * unit;
        for line in STROKES[(c - b'A') as usize] {
            let map = |(gx, gy): (f64, f64)| {
                let y = gy * unit;
                let x = x_off + gx * unit + slant * (size - y);
                (x, y + hw)
            };
            for pair in line.windows(2) {
                let (ax, ay) = map(pair[0]);
                let (bx, by) = map(pair[1]);
                prims.push(Prim::Capsule { ax, ay, bx, by, hw });
            }
        }
    }
    TextLayout {
        width: (n * STROKE_W + (n - 1.0) * STROKE_GAP) * unit + 2.0 * hw + shear_extra,
        height: size + 2.0 * hw,
        prims,
    }
}

const BITMAP: [[u8; 7]; 26] = [
    [
        0b01110, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001,
    ], // A
    [
        0b11110, 0b10001, 0b10001, 0b11110, 0b10001, 0b10001, 0b11110,
    ], // B
    [
        0b01110, 0b10001, 0b10000, 0b10000, 0b10000, 0b10001, 0b01110,
    ], // C
    [
        0b11110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b11110,
    ], // D
    [
        0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b11111,
    ], // E
    [
        0b11111, 0b10000, 0b10000, 0b11110, 0b10000, 0b10000, 0b10000,
    ], // F
    [
        0b01110, 0b10001, 0b10000, 0b10111, 0b10001, 0b10001, 0b01111,
    ], // G
    [
        0b10001, 0b10001, 0b10001, 0b11111, 0b10001, 0b10001, 0b10001,
    ], // H
    [
        0b01110, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b01110,
    ], // I
    [
        0b00111, 0b00010, 0b00010, 0b00010, 0b00010, 0b10010, 0b01100,
    ], // J
    [
        0b10001, 0b10010, 0b10100, 0b11000, 0b10100, 0b10010, 0b10001,
    ], // K
    [
        0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b10000, 0b11111,
    ], // L
    [
        0b10001, 0b11011, 0b10101, 0b10101, 0b10001, 0b10001, 0b10001,
    ], // M
    [
        0b10001, 0b10001, 0b11001, 0b10101, 0b10011, 0b10001, 0b10001,
    ], // N
    [
        0b01110, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110,
    ], // O
    [
        0b11110, 0b10001, 0b10001, 0b11110, 0b10000, 0b10000, 0b10000,
    ], // P
    [
        0b01110, 0b10001, 0b10001, 0b10001, 0b10101, 0b10010, 0b01101,
    ], // Q
    [
        0b11110, 0b10001, 0b10001, 0b11110, 0b10100, 0b10010, 0b10001,
    ], // R
    [
        0b01111, 0b10000, 0b10000, 0b01110, 0b00001, 0b00001, 0b11110,
    ], // S
    [
        0b11111, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100, 0b00100,
    ], // T
    [
        0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01110,
    ], // U
    [
        0b10001, 0b10001, 0b10001, 0b10001, 0b10001, 0b01010, 0b00100,
    ], // V
    [
        0b10001, 0b10001, 0b10001, 0b10101, 0b10101, 0b10101, 0b01010,
    ], // W
    [
        0b10001, 0b10001, 0b01010, 0b00100, 0b01010, 0b10001, 0b10001,
    ], // X
    [
        0b10001, 0b10001, 0b01010, 0b00100, 0b00100, 0b00100, 0b00100,
    ], // Y
    [
        0b11111, 0b00001, 0b00010, 0b00100, 0b01000, 0b10000, 0b11111,
    ], // Z
];

type Polyline = &'static [(f64, f64)];

const STROKES: [&[Polyline]; 26] = [
    // A
    &[
        &[(0.0, 6.0), (2.0, 0.0), (4.0, 6.0)],
        &[(0.83, 3.5), (3.17, 3.5)],
    ],
    // B
    &[
        &[(0.0, 0.0), (0.0, 6.0)],
        &[
            (0.0, 0.0),
            (3.0, 0.0),
            (4.0, 0.8),
            (4.0, 2.2),
            (3.0, 3.0),
            (0.0, 3.0),
        ],
        &[(3.0, 3.0), (4.0, 3.8), (4.0, 5.2), (3.0, 6.0), (0.0, 6.0)],
    ],
    // C
    &[&[
        (4.0, 1.0),
        (3.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (0.0, 5.0),
        (1.0, 6.0),
        (3.0, 6.0),
        (4.0, 5.0),
    ]],
    // D
    &[&[
        (0.0, 0.0),
        (0.0, 6.0),
        (2.5, 6.0),
        (4.0, 4.5),
        (4.0, 1.5),
        (2.5, 0.0),
        (0.0, 0.0),
    ]],
    // E
    &[
        &[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0), (4.0, 6.0)],
        &[(0.0, 3.0), (3.0, 3.0)],
    ],
    // F
    &[
        &[(4.0, 0.0), (0.0, 0.0), (0.0, 6.0)],
        &[(0.0, 3.0), (3.0, 3.0)],
    ],
    // G
    &[&[
        (4.0, 1.0),
        (3.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (0.0, 5.0),
        (1.0, 6.0),
        (3.0, 6.0),
        (4.0, 5.0),
        (4.0, 3.5),
        (2.5, 3.5),
    ]],
    // H
    &[
        &[(0.0, 0.0), (0.0, 6.0)],
        &[(4.0, 0.0), (4.0, 6.0)],
        &[(0.0, 3.0), (4.0, 3.0)],
    ],
    // I
    &[
        &[(1.0, 0.0), (3.0, 0.0)],
        &[(2.0, 0.0), (2.0, 6.0)],
        &[(1.0, 6.0), (3.0, 6.0)],
    ],
    // J
    &[&[(4.0, 0.0), (4.0, 5.0), (3.0, 6.0), (1.0, 6.0), (0.0, 5.0)]],
    // K
    &[
        &[(0.0, 0.0), (0.0, 6.0)],
        &[(4.0, 0.0), (0.0, 4.0)],
        &[(1.2, 2.8), (4.0, 6.0)],
    ],
    // L
    &[&[(0.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
    // M
    &[&[(0.0, 6.0), (0.0, 0.0), (2.0, 3.5), (4.0, 0.0), (4.0, 6.0)]],
    // N
    &[&[(0.0, 6.0), (0.0, 0.0), (4.0, 6.0), (4.0, 0.0)]],
    // O
    &[&[
        (1.0, 0.0),
        (3.0, 0.0),
        (4.0, 1.0),
        (4.0, 5.0),
        (3.0, 6.0),
        (1.0, 6.0),
        (0.0, 5.0),
        (0.0, 1.0),
        (1.0, 0.0),
    ]],
    // P
    &[&[
        (0.0, 6.0),
        (0.0, 0.0),
        (3.0, 0.0),
        (4.0, 0.8),
        (4.0, 2.4),
        (3.0, 3.2),
        (0.0, 3.2),
    ]],
    // Q
    &[
        &[
            (1.0, 0.0),
            (3.0, 0.0),
            (4.0, 1.0),
            (4.0, 5.0),
            (3.0, 6.0),
            (1.0, 6.0),
            (0.0, 5.0),
            (0.0, 1.0),
            (1.0, 0.0),
        ],
        &[(2.5, 4.5), (4.0, 6.0)],
    ],
    // R
    &[
        &[
            (0.0, 6.0),
            (0.0, 0.0),
            (3.0, 0.0),
            (4.0, 0.8),
            (4.0, 2.4),
            (3.0, 3.2),
            (0.0, 3.2),
        ],
        &[(2.0, 3.2), (4.0, 6.0)],
    ],
    // S
    &[&[
        (4.0, 1.0),
        (3.0, 0.0),
        (1.0, 0.0),
        (0.0, 1.0),
        (0.0, 2.0),
        (1.0, 3.0),
        (3.0, 3.0),
        (4.0, 4.0),
        (4.0, 5.0),
        (3.0, 6.0),
        (1.0, 6.0),
        (0.0, 5.0),
    ]],
    // T
    &[&[(0.0, 0.0), (4.0, 0.0)], &[(2.0, 0.0), (2.0, 6.0)]],
    // U
    &[&[
        (0.0, 0.0),
        (0.0, 5.0),
        (1.0, 6.0),
        (3.0, 6.0),
        (4.0, 5.0),
        (4.0, 0.0),
    ]],
    // V
    &[&[(0.0, 0.0), (2.0, 6.0), (4.0, 0.0)]],
    // W
    &[&[(0.0, 0.0), (1.0, 6.0), (2.0, 2.5), (3.0, 6.0), (4.0, 0.0)]],
    // X
    &[&[(0.0, 0.0), (4.0, 6.0)], &[(4.0, 0.0), (0.0, 6.0)]],
    // Y
    &[
        &[(0.0, 0.0), (2.0, 3.0)],
        &[(4.0, 0.0), (2.0, 3.0), (2.0, 6.0)],
    ],
    // Z
    &[&[(0.0, 0.0), (4.0, 0.0), (0.0, 6.0), (4.0, 6.0)]],
];

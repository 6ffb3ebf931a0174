//! Outline geometry for the eight shape kinds.
//!
//! Every shape is described in a local frame where it fits inside the unit
//! disk, so a shape of radius `r` stays inside any axis-aligned box of half
//! side `r` around its center whatever the rotation.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Triangle,
    Square,
    Circle,
    Rectangle,
    Ellipse,
    Pentagon,
    Hexagon,
    Star,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 8] = [
        ShapeKind::Triangle,
        ShapeKind::Square,
        ShapeKind::Circle,
        ShapeKind::Rectangle,
        ShapeKind::Ellipse,
        ShapeKind::Pentagon,
        ShapeKind::Hexagon,
        ShapeKind::Star,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Triangle => "triangle",
            ShapeKind::Square => "square",
            ShapeKind::Circle => "circle",
            ShapeKind::Rectangle => "rectangle",
            ShapeKind::Ellipse => "ellipse",
            ShapeKind::Pentagon => "pentagon",
            ShapeKind::Hexagon => "hexagon",
            ShapeKind::Star => "star",
        }
    }

    pub(crate) fn outline(self) -> Outline {
        match self {
            ShapeKind::Circle => Outline::Ellipse { ry: 1.0 },
            ShapeKind::Ellipse => Outline::Ellipse { ry: 0.5 },
            ShapeKind::Triangle => Outline::Polygon(regular(3, -PI / 2.0)),
            ShapeKind::Square => Outline::Polygon(regular(4, PI / 4.0)),
            ShapeKind::Pentagon => Outline::Polygon(regular(5, -PI / 2.0)),
            ShapeKind::Hexagon => Outline::Polygon(regular(6, 0.0)),
            ShapeKind::Rectangle => {
                // 2:1 aspect with corners on the unit circle
                let hx = 2.0 / 5f64.sqrt();
                let hy = 1.0 / 5f64.sqrt();
                Outline::Polygon(vec![(-hx, -hy), (hx, -hy), (hx, hy), (-hx, hy)])
            }
            ShapeKind::Star => {
                let inner = (PI / 10.0).sin() / (3.0 * PI / 10.0).sin();
                let pts = (0..10)
                    .map(|i| {
                        let radius = if i % 2 == 0 { 1.0 } else { inner };
                        let a = -PI / 2.0 + i as f64 * PI / 5.0;
                        (radius * a.cos(), radius * a.sin())
                    })
                    .collect();
                Outline::Polygon(pts)
            }
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapeKind::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Stimulus(format!("unknown shape {s:?}")))
    }
}

fn regular(n: usize, phase: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|i| {
            let a = phase + TAU * i as f64 / n as f64;
            (a.cos(), a.sin())
        })
        .collect()
}

#[derive(Clone, Debug)]
pub(crate) enum Outline {
    /// Axis-aligned ellipse with semi-axes (1, ry).
    Ellipse {
        ry: f64,
    },
    Polygon(Vec<(f64, f64)>),
}

impl Outline {
    /// Even-odd point test in the local unit frame.
    pub(crate) fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Outline::Ellipse { ry } => x * x + (y / ry) * (y / ry) <= 1.0,
            Outline::Polygon(pts) => {
                let mut inside = false;
                let mut j = pts.len() - 1;
                for i in 0..pts.len() {
                    let (xi, yi) = pts[i];
                    let (xj, yj) = pts[j];
                    if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
                        inside = !inside;
                    }
                    j = i;
                }
                inside
            }
        }
    }
}

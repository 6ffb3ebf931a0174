//! Rasterization of scene specs.
//!
//! Coverage is estimated with a fixed 4×4 grid of subsamples per pixel and the
//! pixel is a linear blend of exactly two colors: the foreground term and the
//! background term. No other color can appear in a rendered scene.

use image::{Rgb as Px, RgbImage};

use super::glyphs;
use super::{
    GenParams, ImageGeometry, SceneSpec, ShapeSceneSpec, StimulusRecord, StroopSceneSpec, Variant,
};
use crate::error::{Error, Result};
use crate::palette::{Palette, Rgb};

const SS: u32 = 4;
const SAMPLES: u32 = SS * SS;
const EDGE_EPS: f64 = 1e-6;

/// Per-pixel count of covered subsamples, in `0..=SAMPLES`.
struct Coverage {
    width: u32,
    height: u32,
    hits: Vec<u8>,
}

impl Coverage {
    fn new(g: ImageGeometry) -> Self {
        Coverage {
            width: g.width,
            height: g.height,
            hits: vec![0; (g.width * g.height) as usize],
        }
    }

    fn compose(&self, fg: Rgb, bg: Rgb) -> RgbImage {
        let mut img = RgbImage::new(self.width, self.height);
        for (px, &k) in img.pixels_mut().zip(&self.hits) {
            let k = k as u32;
            let mix = |f: u8, b: u8| {
                ((f as u32 * k + b as u32 * (SAMPLES - k) + SAMPLES / 2) / SAMPLES) as u8
            };
            *px = Px([
                mix(fg.r(), bg.r()),
                mix(fg.g(), bg.g()),
                mix(fg.b(), bg.b()),
            ]);
        }
        img
    }
}

/// Pixel range overlapped by the continuous interval [lo, hi), clamped.
fn pixel_span(lo: f64, hi: f64, extent: u32) -> std::ops::Range<u32> {
    let a = lo.floor().max(0.0) as u32;
    let b = (hi.ceil().max(0.0) as u32).min(extent);
    a.min(b)..b
}

fn check_inside(what: &str, x0: f64, y0: f64, x1: f64, y1: f64, g: ImageGeometry) -> Result<()> {
    let (w, h) = (g.width as f64, g.height as f64);
    let violated = if x0 < -EDGE_EPS {
        Some("left edge")
    } else if y0 < -EDGE_EPS {
        Some("top edge")
    } else if x1 > w + EDGE_EPS {
        Some("right edge")
    } else if y1 > h + EDGE_EPS {
        Some("bottom edge")
    } else {
        None
    };
    match violated {
        Some(edge) => Err(Error::Render(format!(
            "containment violated: {what} extends past the {edge} of the {}x{} canvas",
            g.width, g.height
        ))),
        None => Ok(()),
    }
}

fn render_shape(s: &ShapeSceneSpec, g: ImageGeometry, palette: &Palette) -> Result<RgbImage> {
    if !(s.scale > 0.0 && s.scale <= 1.0) || !s.rotation.is_finite() {
        return Err(Error::Render(format!(
            "invalid shape parameters (scale {}, rotation {})",
            s.scale, s.rotation
        )));
    }
    let r = s.scale * g.side() / 2.0;
    let cx = s.center[0] * g.width as f64;
    let cy = s.center[1] * g.height as f64;
    check_inside("shape", cx - r, cy - r, cx + r, cy + r, g)?;

    let outline = s.shape.outline();
    let (sin, cos) = s.rotation.to_radians().sin_cos();
    let mut cov = Coverage::new(g);
    for py in pixel_span(cy - r, cy + r, g.height) {
        for px in pixel_span(cx - r, cx + r, g.width) {
            let mut k = 0u8;
            for j in 0..SS {
                let dy = py as f64 + (j as f64 + 0.5) / SS as f64 - cy;
                for i in 0..SS {
                    let dx = px as f64 + (i as f64 + 0.5) / SS as f64 - cx;
                    let lx = (dx * cos + dy * sin) / r;
                    let ly = (-dx * sin + dy * cos) / r;
                    if outline.contains(lx, ly) {
                        k += 1;
                    }
                }
            }
            cov.hits[(py * g.width + px) as usize] = k;
        }
    }
    Ok(cov.compose(palette.rgb(s.object_color), palette.rgb(s.background)))
}

fn render_stroop(s: &StroopSceneSpec, g: ImageGeometry, palette: &Palette) -> Result<RgbImage> {
    let text = palette.label(s.word).to_ascii_uppercase();
    let lay = glyphs::layout(s.font_id, &text, s.font_size)?;
    let x0 = s.position[0] * g.width as f64 - lay.width / 2.0;
    let y0 = s.position[1] * g.height as f64 - lay.height / 2.0;
    check_inside("text", x0, y0, x0 + lay.width, y0 + lay.height, g)?;

    // supersampled mask so overlapping strokes are not counted twice
    let mw = g.width * SS;
    let mh = g.height * SS;
    let mut mask = vec![false; (mw * mh) as usize];
    let step = 1.0 / SS as f64;
    for prim in &lay.prims {
        let (bx0, by0, bx1, by1) = prim.bounds();
        let sx = pixel_span((x0 + bx0) * SS as f64, (x0 + bx1) * SS as f64, mw);
        let sy = pixel_span((y0 + by0) * SS as f64, (y0 + by1) * SS as f64, mh);
        for my in sy {
            let y = (my as f64 + 0.5) * step - y0;
            for mx in sx.clone() {
                let x = (mx as f64 + 0.5) * step - x0;
                if prim.contains(x, y) {
                    mask[(my * mw + mx) as usize] = true;
                }
            }
        }
    }
    let mut cov = Coverage::new(g);
    for py in 0..g.height {
        for px in 0..g.width {
            let mut k = 0u8;
            for j in 0..SS {
                let row = ((py * SS + j) * mw + px * SS) as usize;
                k += mask[row..row + SS as usize].iter().filter(|&&b| b).count() as u8;
            }
            cov.hits[(py * g.width + px) as usize] = k;
        }
    }
    Ok(cov.compose(palette.rgb(s.font_color), palette.rgb(s.background)))
}

/// Deterministic raster of one scene.
pub fn render_scene(
    spec: &SceneSpec,
    geometry: ImageGeometry,
    palette: &Palette,
) -> Result<RgbImage> {
    spec.check_colors()
        .map_err(|e| Error::Render(e.to_string()))?;
    match spec {
        SceneSpec::Shape(s) => render_shape(s, geometry, palette),
        SceneSpec::Stroop(s) => render_stroop(s, geometry, palette),
    }
}

pub fn render_record(
    record: &StimulusRecord,
    variant: Variant,
    params: &GenParams,
    palette: &Palette,
) -> Result<RgbImage> {
    let img = render_scene(&record.spec, params.geometry, palette)
        .map_err(|e| Error::Render(format!("record {}: {e}", record.id)))?;
    Ok(match variant {
        Variant::Color => img,
        Variant::Gray => grayscale_variant(&img),
    })
}

/// Replaces every pixel with its luma `0.299R + 0.587G + 0.114B`, rounded.
pub fn grayscale_variant(img: &RgbImage) -> RgbImage {
    let mut out = img.clone();
    for px in out.pixels_mut() {
        let [r, g, b] = px.0.map(u32::from);
        let y = ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8;
        *px = Px([y, y, y]);
    }
    out
}

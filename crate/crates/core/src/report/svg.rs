use std::fmt::Write as _;

use super::Provenance;

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub name: String,
    pub pct: f64,
}

/// One stacked bar; no segments means no data.
#[derive(Clone, Debug, PartialEq)]
pub struct Bar {
    pub label: String,
    pub segments: Vec<Segment>,
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f",
];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, w: u32, h: u32, title: &str, prov: &Provenance) {
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- colorprobe\n");
    for (k, v) in &prov.0 {
        // "--" is not allowed inside an XML comment
        let _ = writeln!(out, "  {}: {}", esc(k), esc(v).replace("--", "- -"));
    }
    out.push_str("-->\n");
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>",
        w / 2,
        esc(title)
    );
}

/// Horizontal 100% stacked bars. Each segment rect carries `data-segment`
/// and `data-pct`.
pub fn stacked_bar_svg(title: &str, bars: &[Bar], prov: &Provenance) -> String {
    let mut names: Vec<&str> = Vec::new();
    for s in bars.iter().flat_map(|b| &b.segments) {
        if !names.contains(&s.name.as_str()) {
            names.push(&s.name);
        }
    }
    let (left, bar_w, row_h) = (140.0, 480.0, 26.0);
    let legend_y = 40.0 + row_h * bars.len() as f64 + 10.0;
    let width = 700;
    let height = (legend_y + 18.0 * names.len() as f64 + 10.0).ceil() as u32;
    let mut out = String::new();
    header(&mut out, width, height, title, prov);
    for (i, bar) in bars.iter().enumerate() {
        let y = 32.0 + row_h * i as f64;
        let _ = writeln!(
            out,
            "<g data-bar=\"{}\"><text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            esc(&bar.label),
            left - 6.0,
            y + 14.0,
            esc(&bar.label)
        );
        if bar.segments.is_empty() {
            let _ = writeln!(
                out,
                "<text x=\"{left}\" y=\"{:.1}\">no data</text>",
                y + 14.0
            );
        }
        let mut x = left;
        for s in &bar.segments {
            let w = bar_w * s.pct / 100.0;
            let color =
                PALETTE[names.iter().position(|n| *n == s.name).unwrap_or(0) % PALETTE.len()];
            let _ = writeln!(
                out,
                "<rect x=\"{x:.2}\" y=\"{y:.1}\" width=\"{w:.2}\" height=\"{:.1}\" fill=\"{color}\" data-segment=\"{}\" data-pct=\"{:.4}\"><title>{} {:.2}%</title></rect>",
                row_h - 6.0,
                esc(&s.name),
                s.pct,
                esc(&s.name),
                s.pct
            );
            x += w;
        }
        out.push_str("</g>\n");
    }
    for (i, n) in names.iter().enumerate() {
        let y = legend_y + 18.0 * i as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{left}\" y=\"{y:.1}\" width=\"12\" height=\"12\" fill=\"{}\"/><text x=\"{}\" y=\"{:.1}\">{}</text>",
            PALETTE[i % PALETTE.len()],
            left + 18.0,
            y + 10.0,
            esc(n)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Vertical bar histogram; `reference` is drawn as a polyline over the bars.
pub fn histogram_svg(
    title: &str,
    bins: &[(String, Option<f64>)],
    reference: Option<&[f64]>,
    prov: &Provenance,
) -> String {
    let (left, top, plot_h) = (50.0, 36.0, 220.0);
    let bin_w = (600.0 / bins.len().max(1) as f64).min(60.0);
    let peak = bins
        .iter()
        .filter_map(|(_, p)| *p)
        .chain(reference.into_iter().flatten().copied())
        .fold(0.0f64, f64::max)
        .max(1e-9);
    let width = (left + bin_w * bins.len() as f64 + 20.0).ceil() as u32;
    let height = (top + plot_h + 50.0) as u32;
    let base = top + plot_h;
    let mut out = String::new();
    header(&mut out, width.max(200), height, title, prov);
    let _ = writeln!(
        out,
        "<line x1=\"{left}\" y1=\"{base}\" x2=\"{}\" y2=\"{base}\" stroke=\"#333\"/>",
        left + bin_w * bins.len() as f64
    );
    if bins.iter().all(|(_, p)| p.is_none()) {
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\">no data</text>",
            left + 10.0,
            base - 20.0
        );
    }
    for (i, (label, pct)) in bins.iter().enumerate() {
        let x = left + bin_w * i as f64;
        if let Some(p) = pct {
            let h = plot_h * p / peak;
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\" data-bin=\"{}\" data-pct=\"{p:.4}\"/>",
                x + 1.0,
                base - h,
                bin_w - 2.0,
                PALETTE[0],
                esc(label)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\">{}</text>",
            x + bin_w / 2.0,
            base + 14.0,
            esc(label)
        );
    }
    if let Some(r) = reference {
        let pts: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(i, p)| {
                format!(
                    "{:.2},{:.2}",
                    left + bin_w * (i as f64 + 0.5),
                    base - plot_h * p / peak
                )
            })
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\" data-series=\"reference\"/>",
            pts.join(" "),
            PALETTE[2]
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pcts(svg: &str) -> Vec<f64> {
        svg.split("data-pct=\"")
            .skip(1)
            .map(|s| s[..s.find('"').unwrap()].parse().unwrap())
            .collect()
    }

    #[test]
    fn stacked_masses_sum_to_hundred() {
        let thirds = |l: &str| Bar {
            label: l.into(),
            segments: ["a", "b", "c"]
                .iter()
                .map(|n| Segment {
                    name: n.to_string(),
                    pct: 100.0 / 3.0,
                })
                .collect(),
        };
        let svg = stacked_bar_svg("t", &[thirds("x"), thirds("y")], &Provenance::new());
        let p = pcts(&svg);
        assert_eq!(p.len(), 6);
        for chunk in p.chunks(3) {
            assert!((chunk.iter().sum::<f64>() - 100.0).abs() <= 0.1);
        }
    }

    #[test]
    fn escapes_and_no_data() {
        let bars = [Bar {
            label: "a<b".into(),
            segments: vec![],
        }];
        let svg = stacked_bar_svg("x & y", &bars, &Provenance::new().with("k", "a--b"));
        assert!(svg.contains("a&lt;b") && svg.contains("x &amp; y") && svg.contains("no data"));
        let comment = &svg[svg.find("<!--").unwrap() + 4..svg.find("-->").unwrap()];
        assert!(!comment.contains("--"));
    }

    #[test]
    fn histogram_bins() {
        let bins = vec![("0".to_string(), Some(0.25)), ("1".to_string(), Some(0.75))];
        let svg = histogram_svg("h", &bins, Some(&[0.5, 0.5]), &Provenance::new());
        assert_eq!(pcts(&svg), vec![0.25, 0.75]);
        assert!(svg.contains("data-series=\"reference\""));
    }
}

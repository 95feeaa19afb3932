//! Minimal SVG line plots against word beam width on a log axis.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub k_w: usize,
    pub y: f64,
    /// Optional interval drawn as a vertical bar.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
    /// Shaded reference range; an open upper end runs to the top.
    pub band: Option<(f64, Option<f64>)>,
}

const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];
const W: f64 = 360.0;
const H: f64 = 260.0;
const MARGIN: f64 = 48.0;

fn esc(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Panels side by side, sharing `y_label`.
pub fn render(panels: &[Panel], y_label: &str) -> String {
    let total_w = W * panels.len().max(1) as f64;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{H}" viewBox="0 0 {total_w} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{total_w}" height="{H}" fill="white"/>"#
    );
    for (i, p) in panels.iter().enumerate() {
        panel(&mut svg, p, i as f64 * W, y_label);
    }
    svg.push_str("</svg>\n");
    svg
}

fn panel(svg: &mut String, p: &Panel, x0: f64, y_label: &str) {
    let pts = p.series.iter().flat_map(|s| s.points.iter());
    let mut ys: Vec<f64> = Vec::new();
    let mut ks: Vec<f64> = Vec::new();
    for pt in pts {
        ks.push((pt.k_w.max(1) as f64).log10());
        ys.push(pt.y);
        if let Some((a, b)) = pt.interval {
            ys.extend([a, b]);
        }
    }
    ys.retain(|y| y.is_finite());
    if let Some((lo, hi)) = p.band {
        ys.push(lo);
        ys.extend(hi);
    }
    let (kmin, kmax) = bounds(&ks, 0.0, 3.0);
    let (ymin, ymax) = bounds(&ys, 0.0, 1.0);
    let (left, right, top, bottom) = (x0 + MARGIN, x0 + W - 12.0, 24.0, H - 36.0);
    let sx = |k: f64| left + (k - kmin) / (kmax - kmin) * (right - left);
    let sy = |y: f64| bottom - (y - ymin) / (ymax - ymin) * (bottom - top);

    let _ = writeln!(
        svg,
        r#"<text x="{}" y="14" text-anchor="middle" font-weight="bold">{}</text>"#,
        (left + right) / 2.0,
        esc(&p.title)
    );
    if let Some((lo, hi)) = p.band {
        let y_hi = sy(hi.unwrap_or(ymax).min(ymax));
        let y_lo = sy(lo.max(ymin));
        if y_lo > y_hi {
            let _ = writeln!(
                svg,
                r##"<rect x="{left}" y="{y_hi:.2}" width="{:.2}" height="{:.2}" fill="#999" fill-opacity="0.25"/>"##,
                right - left,
                y_lo - y_hi
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#
    );
    if ymin < 0.0 && ymax > 0.0 {
        let z = sy(0.0);
        let _ = writeln!(
            svg,
            r##"<line x1="{left}" y1="{z:.2}" x2="{right}" y2="{z:.2}" stroke="#bbb" stroke-dasharray="3,3"/>"##
        );
    }
    for e in (kmin.ceil() as i32)..=(kmax.floor() as i32) {
        let x = sx(e as f64);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 14.0,
            10f64.powi(e)
        );
    }
    for y in [ymin, (ymin + ymax) / 2.0, ymax] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{y:.1}</text>"#,
            left - 4.0,
            sy(y) + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{}" text-anchor="middle">word beam width</text>"#,
        (left + right) / 2.0,
        H - 6.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{:.2}" text-anchor="middle" transform="rotate(-90 {} {:.2})">{}</text>"#,
        x0 + 12.0,
        (top + bottom) / 2.0,
        x0 + 12.0,
        (top + bottom) / 2.0,
        esc(y_label)
    );
    for (i, s) in p.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut sorted: Vec<&Point> = s.points.iter().filter(|pt| pt.y.is_finite()).collect();
        sorted.sort_by_key(|pt| pt.k_w);
        let path: Vec<String> = sorted
            .iter()
            .map(|pt| format!("{:.2},{:.2}", sx((pt.k_w.max(1) as f64).log10()), sy(pt.y)))
            .collect();
        if path.len() > 1 {
            let _ = writeln!(
                svg,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for pt in &sorted {
            let x = sx((pt.k_w.max(1) as f64).log10());
            if let Some((a, b)) = pt.interval {
                let _ = writeln!(
                    svg,
                    r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="{color}"/>"#,
                    sy(a),
                    sy(b)
                );
            }
            let _ = writeln!(
                svg,
                r#"<circle cx="{x:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#,
                sy(pt.y)
            );
        }
        let ly = top + 12.0 * i as f64 + 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{ly:.2}" fill="{color}" text-anchor="end">{}</text>"#,
            right - 2.0,
            esc(&s.label)
        );
    }
}

/// Range of `v` padded by 5%, or `fallback` for empty or flat data.
fn bounds(v: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !min.is_finite() || !max.is_finite() {
        return (lo, hi);
    }
    if max - min < 1e-12 {
        return (min - 1.0, max + 1.0);
    }
    let pad = (max - min) * 0.05;
    (min - pad, max + pad)
}

//! Minimal deterministic SVG charts: stacked line panels and heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 280.0;
const MARGIN: [f64; 4] = [48.0, 150.0, 48.0, 80.0]; // top, right, bottom, left
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

pub struct Line {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Line {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Line {
            name: name.into(),
            points,
        }
    }
}

pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub lines: Vec<Line>,
    /// Shaded x interval.
    pub band: Option<(f64, f64)>,
    /// Vertical marker line.
    pub marker: Option<(f64, String)>,
    pub log_x: bool,
}

impl Panel {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Panel {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            lines: Vec::new(),
            band: None,
            marker: None,
            log_x: false,
        }
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Round tick positions covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64, target: usize) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) || !span.is_finite() {
        return vec![lo];
    }
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 2.5, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= target as f64)
        .unwrap_or(10.0 * mag);
    let start = (lo / step).ceil() as i64;
    let end = (hi / step).floor() as i64;
    (start..=end).map(|k| k as f64 * step).collect()
}

fn label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        return Some((lo - pad, hi + pad));
    }
    let pad = 0.05 * (hi - lo);
    Some((lo - pad, hi + pad))
}

fn draw_panel(out: &mut String, p: &Panel, top: f64) {
    let x0 = MARGIN[3];
    let x1 = WIDTH - MARGIN[1];
    let y0 = top + MARGIN[0];
    let y1 = top + PANEL_HEIGHT - MARGIN[2];
    let fx = |x: f64| if p.log_x { x.log10() } else { x };
    let xs = p
        .lines
        .iter()
        .flat_map(|l| l.points.iter().map(|q| fx(q.0)));
    let ys = p.lines.iter().flat_map(|l| l.points.iter().map(|q| q.1));
    let (xr, yr) = match (range(xs), range(ys)) {
        (Some(a), Some(b)) => (a, b),
        _ => ((0.0, 1.0), (0.0, 1.0)),
    };
    let sx = |x: f64| x0 + (fx(x) - xr.0) / (xr.1 - xr.0) * (x1 - x0);
    let sy = |y: f64| y1 - (y - yr.0) / (yr.1 - yr.0) * (y1 - y0);

    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="14" font-weight="bold">{}</text>"#,
        x0,
        top + 24.0,
        escape(&p.title)
    );
    if let Some((a, b)) = p.band {
        let (a, b) = (sx(a).max(x0), sx(b).min(x1));
        if b > a {
            let _ = writeln!(
                out,
                r##"<rect x="{a:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="#f4b6c2" fill-opacity="0.45"/>"##,
                b - a,
                y1 - y0
            );
        }
    }
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.1}" y="{y0:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for t in ticks(yr.0, yr.1, 5) {
        let y = sy(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" font-size="11" text-anchor="end">{}</text>"##,
            x0 - 6.0,
            y + 4.0,
            label(t)
        );
    }
    for t in ticks(xr.0, xr.1, 8) {
        let x = x0 + (t - xr.0) / (xr.1 - xr.0) * (x1 - x0);
        let text = if p.log_x {
            format!("1e{}", t.round() as i64)
        } else {
            label(t)
        };
        if p.log_x && (t - t.round()).abs() > 1e-9 {
            continue;
        }
        let _ = writeln!(
            out,
            r#"<line x1="{x:.1}" y1="{y1:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 18.0,
            text
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"#,
        0.5 * (x0 + x1),
        y1 + 36.0,
        escape(&p.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        0.5 * (y0 + y1),
        0.5 * (y0 + y1),
        escape(&p.y_label)
    );
    if let Some((m, name)) = &p.marker {
        let x = sx(*m);
        if (x0..=x1).contains(&x) {
            let _ = writeln!(
                out,
                r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#444444" stroke-dasharray="5,4"/><text x="{x:.1}" y="{:.1}" font-size="11" text-anchor="middle">{}</text>"##,
                y0 - 4.0,
                escape(name)
            );
        }
    }
    for (i, l) in p.lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = l
            .points
            .iter()
            .filter(|q| q.0.is_finite() && q.1.is_finite())
            .map(|q| format!("{:.2},{:.2}", sx(q.0), sy(q.1)))
            .collect();
        if !pts.is_empty() {
            let _ = writeln!(
                out,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                pts.join(" ")
            );
            for q in &pts {
                let (x, y) = q.split_once(',').expect("formatted pair");
                let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="2.5" fill="{color}"/>"#);
            }
        }
        let ly = y0 + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#,
            x1 + 12.0,
            x1 + 32.0,
            x1 + 38.0,
            ly + 4.0,
            escape(&l.name)
        );
    }
}

fn header(out: &mut String, height: f64, comment: Option<&str>) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif">"#
    );
    if let Some(c) = comment {
        let _ = writeln!(out, "<!-- {} -->", c.replace("--", "- -"));
    }
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Panels stacked vertically.
pub fn line_chart(panels: &[Panel], comment: Option<&str>) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_HEIGHT * panels.len().max(1) as f64, comment);
    for (i, p) in panels.iter().enumerate() {
        draw_panel(&mut out, p, i as f64 * PANEL_HEIGHT);
    }
    out.push_str("</svg>\n");
    out
}

/// Blue-white-red map of signed values on an integer grid; `values` is row-major
/// over `ys` (outer) and `xs` (inner). Missing cells are grey.
pub fn heatmap(
    title: &str,
    xs: &[i32],
    ys: &[i32],
    values: &[Option<f64>],
    unit: &str,
    comment: Option<&str>,
) -> String {
    let mut out = String::new();
    let cell = 56.0;
    let (x0, y0) = (70.0, 60.0);
    let height = y0 + cell * ys.len() as f64 + 80.0;
    header(&mut out, height, comment);
    let _ = writeln!(
        out,
        r#"<text x="{x0}" y="30" font-size="14" font-weight="bold">{}</text>"#,
        escape(title)
    );
    let vmax = values.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for (r, &y) in ys.iter().enumerate() {
        // largest y at the top
        let top = y0 + cell * (ys.len() - 1 - r) as f64;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="end">{y}</text>"#,
            x0 - 8.0,
            top + 0.5 * cell + 4.0
        );
        for (c, _) in xs.iter().enumerate() {
            let left = x0 + cell * c as f64;
            let (fill, text) = match values[r * xs.len() + c] {
                Some(v) => {
                    let t = if vmax > 0.0 {
                        (v / vmax).clamp(-1.0, 1.0)
                    } else {
                        0.0
                    };
                    let fade = |full: f64| (255.0 - (255.0 - full) * t.abs()).round() as u8;
                    let rgb = if t >= 0.0 {
                        (255, fade(64.0), fade(64.0))
                    } else {
                        (fade(64.0), fade(96.0), 255)
                    };
                    (format!("rgb({},{},{})", rgb.0, rgb.1, rgb.2), label(v))
                }
                None => ("#bbbbbb".to_string(), String::new()),
            };
            let _ = writeln!(
                out,
                r#"<rect x="{left:.1}" y="{top:.1}" width="{cell}" height="{cell}" fill="{fill}" stroke="white"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{text}</text>"#,
                left + 0.5 * cell,
                top + 0.5 * cell + 4.0
            );
        }
    }
    let bottom = y0 + cell * ys.len() as f64;
    for (c, &x) in xs.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{x}</text>"#,
            x0 + cell * (c as f64 + 0.5),
            bottom + 18.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">dx (nodes); rows dy (nodes); {}</text>"#,
        x0 + 0.5 * cell * xs.len() as f64,
        bottom + 40.0,
        escape(unit)
    );
    out.push_str("</svg>\n");
    out
}

//! Minimal SVG emission: stacked line panels and grouped bar charts.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const PANEL_HEIGHT: f64 = 220.0;
const MARGIN: f64 = 48.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Coordinates are rounded to 1e-6 so output is stable and diffable.
fn num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw as a zero-order hold: each value holds until the next point.
    pub step: bool,
}

pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn header(out: &mut String, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = num(WIDTH),
        h = num(height)
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Vertically stacked panels sharing nothing but the figure width.
pub fn line_panels(panels: &[Panel]) -> String {
    let mut out = String::new();
    header(&mut out, PANEL_HEIGHT * panels.len() as f64);
    for (k, panel) in panels.iter().enumerate() {
        let top = k as f64 * PANEL_HEIGHT;
        let (x0, x1) = bounds(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.0)),
        );
        let (y0, y1) = bounds(
            panel
                .series
                .iter()
                .flat_map(|s| s.points.iter().map(|p| p.1)),
        );
        let plot_w = WIDTH - 2.0 * MARGIN;
        let plot_h = PANEL_HEIGHT - 2.0 * MARGIN;
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
        let sy = |y: f64| top + MARGIN + (y1 - y) / (y1 - y0) * plot_h;
        let _ = writeln!(
            out,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
            num(MARGIN),
            num(top + MARGIN),
            num(plot_w),
            num(plot_h)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            num(MARGIN),
            num(top + MARGIN - 8.0),
            escape(&panel.title)
        );
        if y0 < 0.0 && y1 > 0.0 {
            let _ = writeln!(
                out,
                r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#ccc"/>"##,
                num(MARGIN),
                num(MARGIN + plot_w),
                y = num(sy(0.0))
            );
        }
        for (edge, value) in [(x0, x0), (x1, x1)] {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
                num(sx(edge)),
                num(top + PANEL_HEIGHT - MARGIN + 14.0),
                num(value)
            );
        }
        for (edge, value) in [(y0, y0), (y1, y1)] {
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
                num(MARGIN - 4.0),
                num(sy(edge) + 4.0),
                num(value)
            );
        }
        for (i, s) in panel.series.iter().enumerate() {
            let mut d = String::new();
            let mut prev: Option<(f64, f64)> = None;
            for &(x, y) in &s.points {
                match prev {
                    None => {
                        let _ = write!(d, "M{} {}", num(sx(x)), num(sy(y)));
                    }
                    Some((_, py)) if s.step => {
                        let _ = write!(
                            d,
                            " L{} {} L{} {}",
                            num(sx(x)),
                            num(sy(py)),
                            num(sx(x)),
                            num(sy(y))
                        );
                    }
                    Some(_) => {
                        let _ = write!(d, " L{} {}", num(sx(x)), num(sy(y)));
                    }
                }
                prev = Some((x, y));
            }
            let color = PALETTE[i % PALETTE.len()];
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#
            );
            let _ = writeln!(
                out,
                r#"<text x="{}" y="{}" fill="{color}" text-anchor="end">{}</text>"#,
                num(WIDTH - MARGIN),
                num(top + MARGIN - 8.0 - 12.0 * i as f64),
                escape(&s.label)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Bars grouped along the x axis, one bar per series within each group.
pub fn grouped_bars(
    title: &str,
    groups: &[String],
    series: &[String],
    values: &[Vec<f64>],
) -> String {
    let height = PANEL_HEIGHT * 1.5;
    let mut out = String::new();
    header(&mut out, height);
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = height - 2.0 * MARGIN;
    let top_value = values.iter().flatten().copied().fold(0.0, f64::max);
    let top_value = if top_value > 0.0 {
        top_value * 1.05
    } else {
        1.0
    };
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{}</text>"#,
        num(MARGIN),
        num(MARGIN - 8.0),
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        num(MARGIN - 4.0),
        num(MARGIN + 4.0),
        num(top_value)
    );
    let group_w = plot_w / groups.len().max(1) as f64;
    let bar_w = 0.8 * group_w / series.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let left = MARGIN + g as f64 * group_w + 0.1 * group_w;
        for (s, _) in series.iter().enumerate() {
            let v = values
                .get(g)
                .and_then(|row| row.get(s))
                .copied()
                .unwrap_or(0.0);
            let h = v / top_value * plot_h;
            let _ = writeln!(
                out,
                r#"<rect x="{}" y="{}" width="{}" height="{}" fill="{}"/>"#,
                num(left + s as f64 * bar_w),
                num(MARGIN + plot_h - h),
                num(bar_w),
                num(h),
                PALETTE[s % PALETTE.len()]
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            num(MARGIN + (g as f64 + 0.5) * group_w),
            num(height - MARGIN + 14.0),
            escape(name)
        );
    }
    let _ = writeln!(
        out,
        r##"<line x1="{}" y1="{y}" x2="{}" y2="{y}" stroke="#999"/>"##,
        num(MARGIN),
        num(MARGIN + plot_w),
        y = num(MARGIN + plot_h)
    );
    for (s, name) in series.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" fill="{}" text-anchor="end">{}</text>"#,
            num(WIDTH - MARGIN),
            num(MARGIN + 12.0 * s as f64),
            PALETTE[s % PALETTE.len()],
            escape(name)
        );
    }
    out.push_str("</svg>\n");
    out
}

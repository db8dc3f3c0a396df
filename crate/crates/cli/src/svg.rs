//! Minimal scatter plot of mean accuracy against score.

use std::fmt::Write;

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

/// Pads a degenerate or empty range so points still land inside the frame.
fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.05).max(1e-3);
    (lo - pad, hi + pad)
}

/// `points` are `(label, x, y)`; x is mean accuracy, y is P(c=0).
pub fn scatter(title: &str, points: &[(String, f64, f64)]) -> String {
    let (x0, x1) = bounds(points.iter().map(|p| p.1));
    let (y0, y1) = bounds(points.iter().map(|p| p.2));
    let plot_w = WIDTH - 2.0 * MARGIN;
    let plot_h = HEIGHT - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>"#,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{b}" stroke="black"/>"#,
        b = HEIGHT - MARGIN
    );
    for (v, anchor_x, anchor_y, horizontal) in [
        (x0, sx(x0), HEIGHT - MARGIN + 16.0, true),
        (x1, sx(x1), HEIGHT - MARGIN + 16.0, true),
        (y0, MARGIN - 6.0, sy(y0), false),
        (y1, MARGIN - 6.0, sy(y1), false),
    ] {
        let anchor = if horizontal { "middle" } else { "end" };
        let _ = writeln!(
            s,
            r#"<text class="tick" x="{anchor_x:.2}" y="{anchor_y:.2}" text-anchor="{anchor}" font-size="10">{v:.3}</text>"#
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{}" y="{}" text-anchor="middle" font-size="12">mean accuracy</text>"#,
        WIDTH / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="16" y="{c}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {c})">P(c=0)</text>"#,
        c = HEIGHT / 2.0
    );
    for (label, x, y) in points {
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"><title>{}</title></circle>"#,
            sx(*x),
            sy(*y),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    s
}

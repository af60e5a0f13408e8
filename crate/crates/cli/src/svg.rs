//! Minimal SVG line charts and heatmaps for a quick look at the data.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn extent(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

fn header(title: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    s
}

fn axes(s: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64)) {
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{}" text-anchor="middle">{}</text>"#,
        H - MARGIN + 16.0,
        short(x0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        W - MARGIN,
        H - MARGIN + 16.0,
        short(x1)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        H - MARGIN,
        short(y0)
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
        MARGIN - 4.0,
        MARGIN + 4.0,
        short(y1)
    );
}

fn short(v: f64) -> String {
    format!("{v:.4}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// One polyline per `(name, points)` series.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
) -> String {
    let xr = extent(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let yr = extent(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let px = |x: f64| MARGIN + (x - xr.0) / (xr.1 - xr.0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - yr.0) / (yr.1 - yr.0) * (H - 2.0 * MARGIN);
    let mut s = header(title, x_label, y_label);
    axes(&mut s, xr, yr);
    for (k, (name, pts)) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let path: Vec<String> = pts
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{colour}">{}</text>"#,
            W - MARGIN - 120.0,
            MARGIN + 16.0 + 14.0 * k as f64,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Greyscale heatmap of row-major `values` (rows follow `ys`).
pub fn heatmap(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[f64],
) -> String {
    let xr = extent(xs.iter().copied());
    let yr = extent(ys.iter().copied());
    let vr = extent(values.iter().copied());
    let cw = (W - 2.0 * MARGIN) / xs.len().max(1) as f64;
    let ch = (H - 2.0 * MARGIN) / ys.len().max(1) as f64;
    let mut s = header(title, x_label, y_label);
    for (r, _) in ys.iter().enumerate() {
        for (c, _) in xs.iter().enumerate() {
            let v = values[r * xs.len() + c];
            let level = ((v - vr.0) / (vr.1 - vr.0)).clamp(0.0, 1.0);
            let g = (255.0 * (1.0 - level)).round() as u8;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({g},{g},{g})"/>"#,
                MARGIN + c as f64 * cw,
                H - MARGIN - (r + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05
            );
        }
    }
    axes(&mut s, xr, yr);
    s.push_str("</svg>\n");
    s
}

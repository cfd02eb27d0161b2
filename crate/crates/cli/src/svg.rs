//! Static SVG heatmaps and curves. Output depends only on the input values, so
//! identical CSVs render to identical bytes.

use std::fmt::Write as _;

/// 16-step viridis-like ramp, low to high.
pub const RAMP: [&str; 16] = [
    "#440154", "#481a6c", "#472f7d", "#414487", "#39568c", "#31688e", "#2a788e", "#23888e",
    "#1f988b", "#22a884", "#35b779", "#54c568", "#7ad151", "#a5db36", "#d2e21b", "#fde725",
];
/// Fill for missing (divergent or non-finite) cells.
pub const MISSING: &str = "#bbbbbb";

/// Linear mapping of `v` onto the ramp over `[lo, hi]`.
pub fn ramp_color(v: f64, lo: f64, hi: f64) -> &'static str {
    if !v.is_finite() {
        return MISSING;
    }
    let t = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
    let i = (t * RAMP.len() as f64).floor().clamp(0.0, (RAMP.len() - 1) as f64) as usize;
    RAMP[i]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub struct Heatmap<'a> {
    pub title: &'a str,
    /// Row coordinates, drawn bottom to top.
    pub rows: &'a [f64],
    pub row_label: &'a str,
    /// Column coordinates, drawn left to right.
    pub cols: &'a [f64],
    pub col_label: &'a str,
    /// Row-major; `None` draws the missing-cell fill.
    pub values: &'a [Option<f64>],
}

const CELL: f64 = 48.0;
const LEFT: f64 = 90.0;
const TOP: f64 = 40.0;

pub fn heatmap(h: &Heatmap) -> String {
    let (nr, nc) = (h.rows.len(), h.cols.len());
    let finite: Vec<f64> = h.values.iter().flatten().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if finite.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let width = LEFT + nc as f64 * CELL + 130.0;
    let height = TOP + nr as f64 * CELL + 70.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{LEFT}" y="20" font-size="14">{}</text>"#, escape(h.title));
    for (r, _) in h.rows.iter().enumerate() {
        for c in 0..nc {
            let x = LEFT + c as f64 * CELL;
            let y = TOP + (nr - 1 - r) as f64 * CELL;
            let fill = match h.values[r * nc + c] {
                Some(v) => ramp_color(v, lo, hi),
                None => MISSING,
            };
            let _ = writeln!(
                s,
                r#"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="{fill}" stroke="white" stroke-width="0.5"/>"#
            );
        }
    }
    for (r, v) in h.rows.iter().enumerate() {
        let y = TOP + (nr - 1 - r) as f64 * CELL + CELL / 2.0 + 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end">{v:.2e}</text>"#, LEFT - 6.0);
    }
    let base = TOP + nr as f64 * CELL;
    for (c, v) in h.cols.iter().enumerate() {
        let x = LEFT + c as f64 * CELL + CELL / 2.0;
        let _ = writeln!(s, r#"<text x="{x}" y="{}" text-anchor="middle">{v:.2e}</text>"#, base + 16.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + nc as f64 * CELL / 2.0,
        base + 36.0,
        escape(h.col_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#,
        TOP + nr as f64 * CELL / 2.0,
        TOP + nr as f64 * CELL / 2.0,
        escape(h.row_label)
    );

    // colour bar with explicit min/max
    let bx = LEFT + nc as f64 * CELL + 24.0;
    let bar_h = (nr as f64 * CELL).max(160.0);
    let step = bar_h / RAMP.len() as f64;
    for (i, color) in RAMP.iter().enumerate() {
        let y = TOP + bar_h - (i + 1) as f64 * step;
        let _ = writeln!(s, r#"<rect x="{bx}" y="{y}" width="16" height="{step}" fill="{color}"/>"#);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}">max {hi:.3}</text>"#, bx + 22.0, TOP + 8.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}">min {lo:.3}</text>"#, bx + 22.0, TOP + bar_h);
    s.push_str("</svg>\n");
    s
}

pub struct Curve<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub xs: &'a [f64],
    pub ys: &'a [f64],
    pub log_x: bool,
}

pub fn curve(c: &Curve) -> String {
    let (w, h) = (560.0, 380.0);
    let (l, r, t, b) = (70.0, 20.0, 40.0, 50.0);
    let tx = |x: f64| if c.log_x { x.log10() } else { x };
    let pts: Vec<(f64, f64)> = c
        .xs
        .iter()
        .zip(c.ys)
        .map(|(&x, &y)| (tx(x), y))
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let span = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
        if lo.is_finite() && hi > lo {
            (lo, hi)
        } else if lo.is_finite() {
            (lo - 0.5, lo + 0.5)
        } else {
            (0.0, 1.0)
        }
    };
    let (x0, x1) = span(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = span(&mut pts.iter().map(|p| p.1));
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (w - l - r);
    let py = |y: f64| h - b - (y - y0) / (y1 - y0) * (h - t - b);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{l}" y="20" font-size="14">{}</text>"#, escape(c.title));
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - l - r,
        h - t - b
    );
    let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
    let _ = writeln!(s, r##"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.5"/>"##, path.join(" "), RAMP[4]);
    let fmt_x = |v: f64| if c.log_x { format!("{:.2e}", 10f64.powf(v)) } else { format!("{v:.3}") };
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="start">{}</text>"#, h - b + 16.0, fmt_x(x0));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, w - r, h - b + 16.0, fmt_x(x1));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y0:.3}</text>"#, l - 4.0, h - b);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{y1:.3}</text>"#, l - 4.0, t + 8.0);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (l + w - r) / 2.0,
        h - 12.0,
        escape(c.x_label)
    );
    let mid = (t + h - b) / 2.0;
    let _ = writeln!(
        s,
        r#"<text x="16" y="{mid}" transform="rotate(-90 16 {mid})" text-anchor="middle">{}</text>"#,
        escape(c.y_label)
    );
    s.push_str("</svg>\n");
    s
}

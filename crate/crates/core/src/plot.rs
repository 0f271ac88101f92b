//! Minimal SVG charts. Output depends only on the inputs, so the files are
//! byte-stable across runs.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn header(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

/// Scatter of (x, y) points; members of `front` are drawn in red and joined.
pub fn scatter_svg(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], front: &[usize]) -> String {
    let (x0, x1) = span(points.iter().map(|p| p.0));
    let (y0, y1) = span(points.iter().map(|p| p.1));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    header(&mut s, title);
    let _ = writeln!(
        s,
        r##"<path d="M{m} {m} V{b} H{r}" stroke="#333" fill="none"/>"##,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for (v, anchor) in [(x0, "start"), (x1, "end")] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="{anchor}">{v:.2}</text>"#, px(v), H - MARGIN + 16.0);
    }
    for v in [y0, y1] {
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, MARGIN - 6.0, py(v) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{y}" text-anchor="middle" transform="rotate(-90 16 {y})">{}</text>"#,
        escape(y_label),
        y = H / 2.0
    );
    for p in points {
        let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#4a78b5" fill-opacity="0.6"/>"##, px(p.0), py(p.1));
    }
    if !front.is_empty() {
        let path: Vec<String> = front.iter().map(|&i| format!("{:.2},{:.2}", px(points[i].0), py(points[i].1))).collect();
        let _ = writeln!(s, r##"<polyline points="{}" stroke="#c0392b" fill="none"/>"##, path.join(" "));
        for &i in front {
            let _ = writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#c0392b"/>"##, px(points[i].0), py(points[i].1));
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Horizontal bars around a zero line, first bar on top. Positive values
/// are green, negative red.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let max = bars.iter().map(|b| b.1.abs()).fold(0.0, f64::max).max(1e-12);
    let label_w = 150.0;
    let zero = label_w + (W - label_w - MARGIN) / 2.0;
    let half = (W - label_w - MARGIN) / 2.0;
    let row_h = ((H - 2.0 * MARGIN) / bars.len().max(1) as f64).min(28.0);
    let mut s = String::new();
    header(&mut s, title);
    let _ = writeln!(
        s,
        r##"<line x1="{zero:.2}" y1="{}" x2="{zero:.2}" y2="{}" stroke="#333"/>"##,
        MARGIN - 6.0,
        H - MARGIN + 6.0
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = MARGIN + i as f64 * row_h;
        let len = v.abs() / max * half;
        let x = if *v >= 0.0 { zero } else { zero - len };
        let colour = if *v >= 0.0 { "#2e8b57" } else { "#c0392b" };
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{:.2}" width="{len:.2}" height="{:.2}" fill="{colour}"/>"#,
            y + 2.0,
            row_h - 4.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            label_w - 8.0,
            y + row_h / 2.0 + 4.0,
            escape(label)
        );
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}">{v:.4}</text>"#, zero + half + 4.0, y + row_h / 2.0 + 4.0);
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let s = scatter_svg("a<b", "MAPE", "RMSE", &[(1.0, 2.0), (2.0, 1.0), (3.0, 3.0)], &[0, 1]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a&lt;b"));
        assert_eq!(s.matches("<circle").count(), 5);
        let b = bar_chart_svg("words", &[("blocked".into(), 0.4), ("lane".into(), -0.1)]);
        assert_eq!(b.matches("<rect").count(), 3);
        assert_eq!(scatter_svg("t", "x", "y", &[], &[]), scatter_svg("t", "x", "y", &[], &[]));
    }
}

//! Line charts as standalone SVG.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 60.0;

fn ticks(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..=count).map(|i| lo + (hi - lo) * i as f64 / count as f64).collect()
}

/// Polyline of `(x, y)` with an optional dashed horizontal reference line.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, points: &[(f64, f64)], reference: Option<f64>) -> String {
    let finite: Vec<(f64, f64)> = points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let xs = finite.iter().map(|p| p.0);
    let ys = finite.iter().map(|p| p.1).chain(reference);
    let (mut x0, mut x1) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    let (mut y0, mut y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(x0 < x1) {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if !(y0 < y1) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#).unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{title}</text>"#, WIDTH / 2.0).unwrap();
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(s, r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" fill="none" stroke="black"/>"#).unwrap();
    for t in ticks(x0, x1, 5) {
        let x = sx(t);
        writeln!(s, r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="black"/>"#, bottom + 5.0).unwrap();
        writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{t:.3}</text>"#, bottom + 20.0).unwrap();
    }
    for t in ticks(y0, y1, 5) {
        let y = sy(t);
        writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/>"#, left - 5.0).unwrap();
        writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{t:.4}</text>"#, left - 8.0, y + 4.0).unwrap();
    }
    writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{x_label}</text>"#, WIDTH / 2.0, HEIGHT - 15.0).unwrap();
    writeln!(s, r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{y_label}</text>"#, HEIGHT / 2.0, HEIGHT / 2.0).unwrap();
    if let Some(r) = reference {
        let y = sy(r);
        writeln!(s, r##"<line x1="{left}" y1="{y:.2}" x2="{right}" y2="{y:.2}" stroke="#888" stroke-dasharray="6 4"/>"##).unwrap();
    }
    let pts: Vec<String> = finite.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
    writeln!(s, r##"<polyline points="{}" fill="none" stroke="#1f5fa8" stroke-width="2"/>"##, pts.join(" ")).unwrap();
    for (x, y) in &finite {
        writeln!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="3" fill="#1f5fa8"/>"##, sx(*x), sy(*y)).unwrap();
    }
    s.push_str("</svg>\n");
    s
}

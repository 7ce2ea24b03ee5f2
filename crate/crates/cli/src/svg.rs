//! Minimal line plot: frame, end-point tick labels and a polyline per run of
//! finite samples.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 60.0;

pub fn line_plot(xs: &[f64], ys: &[f64], x_label: &str, y_label: &str) -> String {
    let finite = |v: &[f64]| -> (f64, f64) {
        v.iter()
            .filter(|x| x.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (x0, x1) = finite(xs);
    let (_, y1) = finite(ys);
    let y0 = 0.0f64.min(finite(ys).0);
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let px = |x: f64| MARGIN + (x - x0) / span(x0, x1) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / span(y0, y1) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(
        s,
        r#"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - 2.0 * MARGIN,
        H - 2.0 * MARGIN
    );
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for (&x, &y) in xs.iter().zip(ys) {
        if x.is_finite() && y.is_finite() {
            runs.last_mut().unwrap().push((px(x), py(y)));
        } else if !runs.last().unwrap().is_empty() {
            runs.push(Vec::new());
        }
    }
    for run in runs.iter().filter(|r| !r.is_empty()) {
        let pts: Vec<String> = run.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="steelblue" points="{}"/>"#, pts.join(" "));
    }
    let text = |s: &mut String, x: f64, y: f64, anchor: &str, label: &str| {
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{y:.1}" font-size="12" text-anchor="{anchor}">{label}</text>"#);
    };
    text(&mut s, MARGIN, H - MARGIN + 16.0, "middle", &format!("{x0}"));
    text(&mut s, W - MARGIN, H - MARGIN + 16.0, "middle", &format!("{x1}"));
    text(&mut s, MARGIN - 6.0, H - MARGIN, "end", &format!("{y0:.3}"));
    text(&mut s, MARGIN - 6.0, MARGIN + 4.0, "end", &format!("{y1:.3}"));
    text(&mut s, W / 2.0, H - 15.0, "middle", x_label);
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 15 {:.1})">{y_label}</text>"#,
        H / 2.0,
        H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

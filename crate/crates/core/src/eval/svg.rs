use std::fmt::Write;

use super::PositionCurve;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 48.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of labelled curves with shaded 95% bands. `log_x` plots
/// against log10(position + 1).
pub fn curves_svg(curves: &[(String, &PositionCurve)], title: &str, log_x: bool) -> String {
    let xf = |p: usize| if log_x { (p as f64 + 1.0).log10() } else { p as f64 };
    let pts = curves.iter().flat_map(|(_, c)| c.positions.iter().map(|&p| xf(p)));
    let (x0, x1) = pts.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let ys = curves.iter().flat_map(|(_, c)| c.ci_lo.iter().chain(&c.ci_hi).copied());
    let (y0, y1) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let sx = |x: f64| PAD + (x - x0) / span(x0, x1) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / span(y0, y1) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD} {PAD} L{PAD} {b} L{r} {b}" stroke="black" fill="none"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="10">{y1:.3}</text>"#, PAD);
    let _ = writeln!(s, r#"<text x="4" y="{}" font-size="10">{y0:.3}</text>"#, H - PAD);
    for (i, (label, c)) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let mut band = String::new();
        for j in 0..c.len() {
            let _ = write!(band, "{}{:.2} {:.2} ", if j == 0 { "M" } else { "L" }, sx(xf(c.positions[j])), sy(c.ci_hi[j]));
        }
        for j in (0..c.len()).rev() {
            let _ = write!(band, "L{:.2} {:.2} ", sx(xf(c.positions[j])), sy(c.ci_lo[j]));
        }
        let _ = writeln!(s, r#"<path d="{band}Z" fill="{color}" fill-opacity="0.2" stroke="none"/>"#);
        let line: Vec<String> = (0..c.len()).map(|j| format!("{:.2},{:.2}", sx(xf(c.positions[j])), sy(c.mean[j]))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, line.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#, W - PAD - 120.0, PAD + 14.0 * i as f64, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::super::{Metric, PositionCurve};
    use super::*;

    #[test]
    fn emits_one_polyline_per_curve() {
        let a = PositionCurve::from_rows(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.5, 2.0]], Metric::Reward, 1).unwrap();
        let b = PositionCurve::from_rows(&[vec![0.0, 0.5, 1.0], vec![0.0, 0.0, 1.0]], Metric::Reward, 1).unwrap();
        let svg = curves_svg(&[("a".into(), &a), ("b<c".into(), &b)], "t", false);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("b&lt;c"));
        assert!(svg.ends_with("</svg>\n"));
    }
}

//! Static SVG plots of aging curves against the closed-form limit.

use std::fmt::Write;

use crate::limit::closed_form_r;

/// One estimate with its interval, plotted at `theta`.
#[derive(Clone, Copy, Debug)]
pub struct PlotPoint {
    pub theta: f64,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Series index (one series per `t`).
    pub series: usize,
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Renders the points with error bars, the limit curve `R(theta)` for
/// `alpha`, and a legend with one label per series.
pub fn aging_plot(title: &str, alpha: f64, points: &[PlotPoint], labels: &[String]) -> String {
    let theta_max = points.iter().map(|p| p.theta).fold(1.0, f64::max) * 1.1;
    let x = |th: f64| PAD + (W - 2.0 * PAD) * th / theta_max;
    let y = |v: f64| H - PAD - (H - 2.0 * PAD) * v.clamp(0.0, 1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    // axes and ticks
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{:.1},{:.1} L{:.1},{:.1} L{:.1},{:.1}" stroke="black" fill="none"/>"#,
        PAD,
        PAD,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    for k in 0..=5 {
        let v = k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, PAD - 6.0, y(v) + 4.0);
        let th = theta_max * k as f64 / 5.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{th:.2}</text>"#, x(th), H - PAD + 18.0);
    }
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">theta</text>"#, W / 2.0, H - 12.0);
    // limit curve
    let mut d = String::new();
    for k in 0..=200 {
        let th = theta_max * k as f64 / 200.0;
        if let Ok(v) = closed_form_r(th, alpha) {
            let _ = write!(d, "{}{:.2},{:.2} ", if k == 0 { "M" } else { "L" }, x(th), y(v));
        }
    }
    let _ = writeln!(s, r#"<path class="closed-form" d="{}" stroke="black" stroke-width="1.5" fill="none"/>"#, d.trim_end());
    // estimates
    for p in points {
        let c = COLORS[p.series % COLORS.len()];
        let _ = writeln!(
            s,
            r#"<line class="error-bar" x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}" stroke="{3}"/>"#,
            x(p.theta),
            y(p.lo),
            y(p.hi),
            c
        );
        let _ = writeln!(
            s,
            r#"<circle class="estimate" cx="{:.2}" cy="{:.2}" r="3" fill="{}"/>"#,
            x(p.theta),
            y(p.estimate),
            c
        );
    }
    // legend
    let mut ly = PAD + 4.0;
    let _ = writeln!(s, r#"<line x1="{0:.1}" y1="{1:.1}" x2="{2:.1}" y2="{1:.1}" stroke="black"/>"#, W - PAD - 150.0, ly, W - PAD - 130.0);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">limit R(theta)</text>"#, W - PAD - 124.0, ly + 4.0);
    for (i, label) in labels.iter().enumerate() {
        ly += 16.0;
        let c = COLORS[i % COLORS.len()];
        let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{c}"/>"#, W - PAD - 140.0, ly);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, W - PAD - 124.0, ly + 4.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

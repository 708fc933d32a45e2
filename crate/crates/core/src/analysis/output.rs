use std::fmt::Write;

use super::{Histogram, ScatterSeries};

/// `bin_lo,bin_hi,count` rows; floats use the shortest round-trip form.
pub fn histogram_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (lo, hi, c) in h.rows() {
        writeln!(out, "{lo},{hi},{c}").unwrap();
    }
    out
}

/// `frame_id,v,value,condition` rows for every point of every series.
pub fn scatter_csv(series: &[&ScatterSeries]) -> String {
    let mut out = String::from("frame_id,v,value,condition\n");
    for s in series {
        for p in &s.points {
            writeln!(out, "{},{},{},{}", s.frame_ids[p.frame], p.v, p.value, s.condition).unwrap();
        }
    }
    out
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn frame(out: &mut String, title: &str, x: (f64, f64), y: (f64, f64), xlabel: &str, ylabel: &str) {
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#).unwrap();
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title)).unwrap();
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN / 2.0 + 8.0);
    writeln!(out, r#"<path d="M{x0} {y1} V{y0} H{x1}" stroke="black" fill="none"/>"#).unwrap();
    writeln!(out, r#"<text x="{x0}" y="{}">{:.4}</text>"#, y0 + 14.0, x.0).unwrap();
    writeln!(out, r#"<text x="{x1}" y="{}" text-anchor="end">{:.4}</text>"#, y0 + 14.0, x.1).unwrap();
    writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 8.0, escape(xlabel)).unwrap();
    writeln!(out, r#"<text x="4" y="{y0}">{:.4}</text>"#, y.0).unwrap();
    writeln!(out, r#"<text x="4" y="{y1}">{:.4}</text>"#, y.1).unwrap();
    writeln!(out, r#"<text x="12" y="{}" transform="rotate(-90 12 {})" text-anchor="middle">{}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(ylabel)).unwrap();
}

fn scale(x: f64, (lo, hi): (f64, f64), (a, b): (f64, f64)) -> f64 {
    if hi > lo { a + (x - lo) / (hi - lo) * (b - a) } else { (a + b) / 2.0 }
}

const PLOT_X: (f64, f64) = (MARGIN, W - MARGIN / 2.0);
const PLOT_Y: (f64, f64) = (H - MARGIN, MARGIN / 2.0 + 8.0);

/// Bar chart of the in-range counts.
pub fn histogram_svg(h: &Histogram, title: &str, xlabel: &str) -> String {
    let mut out = String::new();
    let peak = h.counts().iter().copied().max().unwrap_or(0).max(1) as f64;
    frame(&mut out, title, h.range(), (0.0, peak), xlabel, "count");
    for (lo, hi, c) in h.rows().filter(|r| r.2 > 0) {
        let xa = scale(lo, h.range(), PLOT_X);
        let xb = scale(hi, h.range(), PLOT_X);
        let y = scale(c as f64, (0.0, peak), PLOT_Y);
        writeln!(out, r#"<rect x="{xa:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#, (xb - xa).max(0.5), PLOT_Y.0 - y, COLORS[0]).unwrap();
    }
    out.push_str("</svg>\n");
    out
}

/// Scatter of `v` (horizontal) against the value, one colour per series.
pub fn scatter_svg(series: &[&ScatterSeries], title: &str) -> String {
    let pts = || series.iter().flat_map(|s| s.points.iter());
    let bounds = |f: fn(&super::ScatterPoint) -> f64| {
        pts().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
    };
    let (xr, yr) = (bounds(|p| p.v), bounds(|p| p.value));
    let ylabel = series.first().map_or("value", |s| s.quantity.name());
    let mut out = String::new();
    frame(&mut out, title, xr, yr, "v (pixel row)", ylabel);
    for (i, s) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        writeln!(out, r#"<text x="{}" y="{}" fill="{c}">{}</text>"#, W - 120.0, 40.0 + 14.0 * i as f64, s.condition).unwrap();
        for p in &s.points {
            let x = scale(p.v, xr, PLOT_X);
            let y = scale(p.value, yr, PLOT_Y);
            writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" fill="{c}" fill-opacity="0.6"/>"#).unwrap();
        }
    }
    out.push_str("</svg>\n");
    out
}

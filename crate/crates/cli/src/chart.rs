//! Self-contained SVG scatter plots of charts, colored by path segment.

use std::fmt::Write as _;

use channel_charting::synthgen::TrajectoryConfig;

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

const SIZE: f64 = 480.0;
const PAD: f64 = 16.0;

/// Waypoint leg walked at the nominal time of each sample index.
pub fn path_segments(traj: &TrajectoryConfig, indices: &[usize]) -> Vec<usize> {
    let ends: Vec<f64> = traj
        .waypoints
        .windows(2)
        .scan(0.0, |acc, w| {
            *acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            Some(*acc)
        })
        .collect();
    let step = traj.speed / traj.sample_rate;
    indices
        .iter()
        .map(|&i| {
            let s = i as f64 * step;
            ends.iter().position(|&e| s < e).unwrap_or(ends.len().saturating_sub(1))
        })
        .collect()
}

/// Scatter of 2-D points, equal axis scaling, `y` pointing up. Point `i` is
/// drawn in `PALETTE[segments[i] % 8]`.
pub fn scatter_svg(points: &[[f64; 2]], segments: &[usize], title: &str) -> String {
    assert_eq!(points.len(), segments.len(), "one segment per point");
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points.iter().filter(|p| p[0].is_finite() && p[1].is_finite()) {
        for c in 0..2 {
            lo[c] = lo[c].min(p[c]);
            hi[c] = hi[c].max(p[c]);
        }
    }
    if lo[0] > hi[0] {
        lo = [0.0; 2];
        hi = [1.0; 2];
    }
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let scale = if span > 0.0 { (SIZE - 2.0 * PAD) / span } else { 1.0 };
    // Center the shorter axis.
    let shift = [
        (SIZE - 2.0 * PAD - (hi[0] - lo[0]) * scale) / 2.0,
        (SIZE - 2.0 * PAD - (hi[1] - lo[1]) * scale) / 2.0,
    ];

    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    )
    .unwrap();
    writeln!(out, "<title>{}</title>", escape(title)).unwrap();
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    let mut current = None;
    for (p, &seg) in points.iter().zip(segments) {
        if !(p[0].is_finite() && p[1].is_finite()) {
            continue;
        }
        let color = PALETTE[seg % PALETTE.len()];
        if current != Some(color) {
            if current.is_some() {
                out.push_str("</g>\n");
            }
            writeln!(out, r#"<g fill="{color}">"#).unwrap();
            current = Some(color);
        }
        let x = PAD + shift[0] + (p[0] - lo[0]) * scale;
        let y = SIZE - PAD - shift[1] - (p[1] - lo[1]) * scale;
        writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.6"/>"#).unwrap();
    }
    if current.is_some() {
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

//! Self-contained SVG rendering: side-by-side field heatmaps with a shared
//! color scale, and residual histograms. Colors follow a viridis-like
//! perceptual ramp; exact colors are not contractual.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sbnn_core::stats::histogram;
use sbnn_core::{Error, Result};

use crate::report::fmt_theta;
use crate::sweep::SweepOutput;

// anchor colors of the viridis ramp, dark purple to yellow
const RAMP: [(u8, u8, u8); 9] = [
    (68, 1, 84),
    (72, 40, 120),
    (62, 74, 137),
    (49, 104, 142),
    (38, 130, 142),
    (31, 158, 137),
    (53, 183, 121),
    (109, 205, 89),
    (253, 231, 37),
];

fn ramp_color(t: f64) -> (u8, u8, u8) {
    let t = t.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let i = (t as usize).min(RAMP.len() - 2);
    let frac = t - i as f64;
    let (r0, g0, b0) = RAMP[i];
    let (r1, g1, b1) = RAMP[i + 1];
    let lerp = |a: u8, b: u8| (a as f64 + frac * (b as f64 - a as f64)).round() as u8;
    (lerp(r0, r1), lerp(g0, g1), lerp(b0, b1))
}

/// Shared color-scale bounds for a pair of fields.
pub fn shared_scale(a: &[f64], b: &[f64]) -> (f64, f64) {
    let lo = a
        .iter()
        .chain(b)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = a
        .iter()
        .chain(b)
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// Two `side x side` heatmaps next to each other on one shared scale.
pub fn heatmap_pair_svg(
    target: &[f64],
    prediction: &[f64],
    side: usize,
    title: &str,
) -> Result<String> {
    if target.len() != side * side || prediction.len() != side * side {
        return Err(Error::Shape(format!(
            "heatmap needs {}x{} fields, got {} and {}",
            side,
            side,
            target.len(),
            prediction.len()
        )));
    }
    let cell = 8usize;
    let gap = 24usize;
    let margin = 12usize;
    let label_h = 20usize;
    let panel = side * cell;
    let width = margin * 2 + panel * 2 + gap;
    let height = margin + label_h + panel + margin;
    let (lo, hi) = shared_scale(target, prediction);
    let range = if hi > lo { hi - lo } else { 1.0 };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(s, "<!-- shared color scale: min {lo:.6} max {hi:.6} -->");
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12">{title}: target (left) vs prediction (right)</text>"#,
        margin,
        margin + 10
    );
    for (panel_idx, values) in [target, prediction].into_iter().enumerate() {
        let x0 = margin + panel_idx * (panel + gap);
        let y0 = margin + label_h;
        for row in 0..side {
            for col in 0..side {
                let v = (values[row * side + col] - lo) / range;
                let (r, g, b) = ramp_color(v);
                let _ = writeln!(
                    s,
                    r##"<rect x="{}" y="{}" width="{cell}" height="{cell}" fill="rgb({r},{g},{b})"/>"##,
                    x0 + col * cell,
                    y0 + row * cell,
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// A fixed-bin histogram of residual values.
pub fn histogram_svg(residuals: &[f64], bins: usize, title: &str) -> Result<String> {
    let (edges, counts) = histogram(residuals, bins)?;
    let width = 460usize;
    let height = 320usize;
    let margin = 40usize;
    let plot_w = width - 2 * margin;
    let plot_h = height - 2 * margin;
    let max_count = counts.iter().copied().max().unwrap_or(1).max(1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{margin}" y="20" font-family="sans-serif" font-size="12">{title}</text>"#
    );
    let bar_w = plot_w as f64 / bins as f64;
    for (i, &count) in counts.iter().enumerate() {
        let h = plot_h as f64 * count as f64 / max_count as f64;
        let x = margin as f64 + i as f64 * bar_w;
        let y = (margin + plot_h) as f64 - h;
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{h:.2}" fill="rgb(49,104,142)" stroke="white" stroke-width="0.5"/>"##,
            bar_w
        );
    }
    // axis line and range labels
    let _ = writeln!(
        s,
        r##"<line x1="{margin}" y1="{}" x2="{}" y2="{}" stroke="black"/>"##,
        margin + plot_h,
        margin + plot_w,
        margin + plot_h
    );
    let _ = writeln!(
        s,
        r#"<text x="{margin}" y="{}" font-family="sans-serif" font-size="10">{:.3}</text>"#,
        margin + plot_h + 14,
        edges[0]
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{:.3}</text>"#,
        margin + plot_w,
        margin + plot_h + 14,
        edges[bins]
    );
    s.push_str("</svg>\n");
    Ok(s)
}

const HISTOGRAM_BINS: usize = 30;

/// Renders the per-cell heatmap pair and residual histogram.
pub fn render_plots(out: &SweepOutput, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    for cell in &out.cells {
        let theta = fmt_theta(cell.report.theta);
        let seed = cell.report.seed;
        let target = out
            .targets
            .iter()
            .find(|(s, _)| *s == seed)
            .map(|(_, f)| f)
            .expect("every cell has a target for its seed");
        let side = target.grid.side();
        let title = format!("theta {theta}, seed {seed}");
        let heat = heatmap_pair_svg(&target.values, &cell.predictions, side, &title)?;
        fs::write(
            dir.join(format!("heatmap_theta_{theta}_seed_{seed}.svg")),
            heat,
        )?;
        let hist = histogram_svg(
            &cell.residuals,
            HISTOGRAM_BINS,
            &format!("residuals, {title}"),
        )?;
        fs::write(
            dir.join(format!("hist_theta_{theta}_seed_{seed}.svg")),
            hist,
        )?;
    }
    Ok(())
}

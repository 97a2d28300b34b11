use std::fmt::Write as _;

use super::RunResult;

/// Per-step CSV: `step,true_x,true_y,est_x,est_y,error_m,updated`.
pub fn run_csv(run: &RunResult) -> String {
    let mut out = String::from("step,true_x,true_y,est_x,est_y,error_m,updated\n");
    for s in &run.steps {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            s.step,
            s.true_pose.x,
            s.true_pose.y,
            s.estimate.x,
            s.estimate.y,
            s.error,
            u8::from(s.updated)
        );
    }
    out
}

/// One row per run: `run,seed,final_error_m,diverged,updates`.
pub fn mc_runs_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("run,seed,final_error_m,diverged,updates\n");
    for (i, r) in runs.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", i, r.seed, r.final_error, u8::from(r.diverged), r.updates());
    }
    out
}

/// Counts of values in 1 m bins `[k, k+1)`; there are `ceil(max) + 1` bins.
pub fn histogram_bins(values: &[f64]) -> Vec<usize> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    let n = max.ceil() as usize + 1;
    let mut bins = vec![0; n];
    for &v in values {
        bins[(v.max(0.0).floor() as usize).min(n - 1)] += 1;
    }
    bins
}

/// Bar chart of [`histogram_bins`] as a standalone SVG document.
pub fn histogram_svg(values: &[f64], title: &str) -> String {
    let bins = histogram_bins(values);
    let (w, h) = (640.0, 360.0);
    let (left, right, top, bottom) = (50.0, 20.0, 40.0, 50.0);
    let plot_w = w - left - right;
    let plot_h = h - top - bottom;
    let peak = bins.iter().copied().max().unwrap_or(0).max(1) as f64;
    let bar_w = plot_w / bins.len() as f64;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#, w / 2.0, escape(title));
    for (i, &c) in bins.iter().enumerate() {
        let bh = plot_h * c as f64 / peak;
        let x = left + i as f64 * bar_w;
        let y = top + plot_h - bh;
        let _ = writeln!(
            s,
            r#"<rect x="{x:.2}" y="{y:.2}" width="{:.2}" height="{bh:.2}" fill="steelblue" stroke="black" stroke-width="0.5"><title>{i}-{} m: {c}</title></rect>"#,
            bar_w * 0.95,
            i + 1
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="10" text-anchor="middle">{i}</text>"#,
            x + bar_w / 2.0,
            top + plot_h + 14.0
        );
    }
    let _ = writeln!(s, r#"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, top + plot_h, left + plot_w, top + plot_h);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="black"/>"#, top + plot_h);
    let _ = writeln!(s, r#"<text x="{left}" y="{}" font-family="sans-serif" font-size="10" text-anchor="end">{}</text>"#, top + 4.0, peak);
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">final error (m)</text>"#, left + plot_w / 2.0, h - 12.0);
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

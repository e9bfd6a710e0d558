//! Minimal SVG charts for explainer outputs. The JSON artifacts are canonical;
//! these are conveniences for eyeballing results.

use std::fmt::Write;

use super::breakdown::BreakDownResult;
use super::pfi::PfiResult;

const WIDTH: f64 = 720.0;
const LEFT: f64 = 170.0;
const RIGHT: f64 = 40.0;
const TOP: f64 = 40.0;
const ROW: f64 = 22.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

/// One line in a [`line_chart`].
#[derive(Debug, Clone)]
pub struct Series<'a> {
    pub name: &'a str,
    pub x: &'a [f64],
    pub y: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

/// Maps `[lo, hi]` onto `[a, b]`; a degenerate range maps to the midpoint.
fn scale(v: f64, lo: f64, hi: f64, a: f64, b: f64) -> f64 {
    if hi > lo {
        a + (v - lo) / (hi - lo) * (b - a)
    } else {
        (a + b) / 2.0
    }
}

fn finite_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

/// Horizontal bars, one per label, drawn from zero.
pub fn bar_chart(title: &str, labels: &[String], values: &[f64]) -> String {
    let height = TOP + ROW * labels.len() as f64 + 30.0;
    let (lo, hi) = finite_range(values.iter().copied().chain([0.0]));
    let x = |v: f64| scale(v, lo, hi, LEFT, WIDTH - RIGHT);
    let mut out = String::new();
    header(&mut out, height, title);
    for (k, (label, &v)) in labels.iter().zip(values).enumerate() {
        let y = TOP + ROW * k as f64;
        let (x0, x1) = (x(0.0).min(x(v)), x(0.0).max(x(v)));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + ROW * 0.65,
            escape(label)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
            y + 3.0,
            (x1 - x0).max(0.5),
            ROW - 6.0,
            if v >= 0.0 { PALETTE[0] } else { PALETTE[1] }
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="10">{v:.4}</text>"#,
            x1 + 4.0,
            y + ROW * 0.65
        );
    }
    let axis = x(0.0);
    let _ = writeln!(
        out,
        r#"<line x1="{axis:.2}" y1="{TOP}" x2="{axis:.2}" y2="{}" stroke="black"/>"#,
        height - 30.0
    );
    out.push_str("</svg>\n");
    out
}

/// Permutation importances as bars, largest first.
pub fn pfi_chart(result: &PfiResult) -> String {
    let ranked = result.ranked();
    let labels: Vec<String> = ranked.iter().map(|f| f.feature.clone()).collect();
    let values: Vec<f64> = ranked.iter().map(|f| f.mean_drop).collect();
    bar_chart(
        &format!("Permutation importance ({}, AUC drop)", result.model_kind),
        &labels,
        &values,
    )
}

/// Overlaid polylines with a legend.
pub fn line_chart(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    let height = 420.0;
    let (plot_l, plot_r, plot_t, plot_b) = (70.0, WIDTH - 160.0, TOP, height - 50.0);
    let (xlo, xhi) = finite_range(series.iter().flat_map(|s| s.x.iter().copied()));
    let (ylo, yhi) = finite_range(series.iter().flat_map(|s| s.y.iter().copied()));
    let mut out = String::new();
    header(&mut out, height, title);
    let _ = writeln!(
        out,
        r#"<polyline points="{plot_l},{plot_t} {plot_l},{plot_b} {plot_r},{plot_b}" fill="none" stroke="black"/>"#
    );
    for (v, y) in [(ylo, plot_b), (yhi, plot_t)] {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.4}</text>"#,
            plot_l - 4.0
        );
    }
    for (v, x) in [(xlo, plot_l), (xhi, plot_r)] {
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{v:.4}</text>"#,
            plot_b + 14.0
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (plot_l + plot_r) / 2.0,
        plot_b + 34.0,
        escape(x_label)
    );
    for (k, s) in series.iter().enumerate() {
        let colour = PALETTE[k % PALETTE.len()];
        let points: Vec<String> = s
            .x
            .iter()
            .zip(s.y)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| {
                format!(
                    "{:.2},{:.2}",
                    scale(x, xlo, xhi, plot_l, plot_r),
                    scale(y, ylo, yhi, plot_b, plot_t)
                )
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"#,
            points.join(" ")
        );
        let ly = plot_t + 16.0 * k as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="2"/>"#,
            plot_r + 10.0,
            plot_r + 30.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}">{}</text>"#,
            plot_r + 34.0,
            ly + 4.0,
            escape(s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Intercept bar, one floating bar per signed contribution, then the final
/// prediction bar.
pub fn waterfall(result: &BreakDownResult) -> String {
    let n = result.contributions.len() + 2;
    let height = TOP + ROW * n as f64 + 30.0;
    let mut levels = vec![0.0, result.intercept];
    let mut running = result.intercept;
    for c in &result.contributions {
        running += c.delta;
        levels.push(running);
    }
    levels.push(result.final_prediction);
    let (lo, hi) = finite_range(levels.into_iter());
    let x = |v: f64| scale(v, lo, hi, LEFT, WIDTH - RIGHT - 60.0);

    let mut out = String::new();
    header(&mut out, height, &format!("Break down ({})", result.model_kind));
    let mut bar = |k: usize, label: &str, from: f64, to: f64, colour: &str, text: String| {
        let y = TOP + ROW * k as f64;
        let (x0, x1) = (x(from).min(x(to)), x(from).max(x(to)));
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + ROW * 0.65,
            escape(label)
        );
        let _ = writeln!(
            out,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{colour}"/>"#,
            y + 3.0,
            (x1 - x0).max(0.5),
            ROW - 6.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{}" font-size="10">{text}</text>"#,
            x1 + 4.0,
            y + ROW * 0.65
        );
    };
    bar(0, "intercept", 0.0, result.intercept, "#7f7f7f", format!("{:.4}", result.intercept));
    let mut running = result.intercept;
    for (k, c) in result.contributions.iter().enumerate() {
        let colour = if c.delta >= 0.0 { PALETTE[1] } else { PALETTE[2] };
        let label = format!("{} = {}", c.feature, c.value);
        bar(k + 1, &label, running, running + c.delta, colour, format!("{:+.4}", c.delta));
        running += c.delta;
    }
    bar(
        n - 1,
        "prediction",
        0.0,
        result.final_prediction,
        PALETTE[0],
        format!("{:.4}", result.final_prediction),
    );
    out.push_str("</svg>\n");
    out
}

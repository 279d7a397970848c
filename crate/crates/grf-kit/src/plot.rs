//! Self-rendered SVG line charts of estimator error versus walker count.
//!
//! One chart per experiment report: mean relative Frobenius error against
//! walker count, one series per coupling with a shaded one-standard-
//! deviation band. Output bytes are deterministic for a fixed report.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::ExperimentReport;
use crate::walk::Coupling;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 55.0;

fn series_color(coupling: Coupling) -> &'static str {
    match coupling {
        Coupling::Iid => "#c62828",
        Coupling::Antithetic => "#2e7d32",
    }
}

/// Renders the chart as an SVG 1.1 document.
pub fn render_svg(report: &ExperimentReport) -> Result<String> {
    if report.summaries.is_empty() {
        return Err(Error::Config("cannot plot an empty report".into()));
    }
    let mut couplings: Vec<Coupling> = report.summaries.iter().map(|s| s.coupling).collect();
    couplings.sort_by_key(|&c| c != Coupling::Iid);
    couplings.dedup();
    let mut walker_counts: Vec<usize> = report.summaries.iter().map(|s| s.num_walkers).collect();
    walker_counts.sort_unstable();
    walker_counts.dedup();

    let x_min = *walker_counts.first().unwrap() as f64;
    let x_max = *walker_counts.last().unwrap() as f64;
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_top = report
        .summaries
        .iter()
        .map(|s| s.mean + s.std)
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.1;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let x_px = |m: f64| MARGIN_LEFT + (m - x_min) / x_span * plot_w;
    let y_px = |v: f64| MARGIN_TOP + (1.0 - (v / y_top).clamp(0.0, 1.0)) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" text-anchor=\"middle\">{} on {} (n={})</text>\n",
        WIDTH / 2.0,
        xml_escape(&report.kernel),
        xml_escape(&report.graph_label),
        report.num_vertices
    ));

    // axes
    let x_axis_y = MARGIN_TOP + plot_h;
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{x_axis_y:.2}\" x2=\"{:.2}\" y2=\"{x_axis_y:.2}\" stroke=\"black\"/>\n",
        MARGIN_LEFT + plot_w
    ));
    svg.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT:.2}\" y1=\"{MARGIN_TOP:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{x_axis_y:.2}\" stroke=\"black\"/>\n"
    ));
    for &m in &walker_counts {
        let x = x_px(m as f64);
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{x_axis_y:.2}\" x2=\"{x:.2}\" y2=\"{:.2}\" stroke=\"black\"/>\n",
            x_axis_y + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{m}</text>\n",
            x_axis_y + 20.0
        ));
    }
    for tick in 0..=4 {
        let v = y_top * tick as f64 / 4.0;
        let y = y_px(v);
        svg.push_str(&format!(
            "<line x1=\"{:.2}\" y1=\"{y:.2}\" x2=\"{MARGIN_LEFT:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">{v:.4}</text>\n",
            MARGIN_LEFT - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">walkers per vertex</text>\n",
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">mean relative Frobenius error</text>\n",
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    ));

    for &coupling in &couplings {
        let points: Vec<(f64, f64, f64)> = walker_counts
            .iter()
            .filter_map(|&m| {
                report
                    .summary_for(coupling, m)
                    .map(|s| (m as f64, s.mean, s.std))
            })
            .collect();
        if points.is_empty() {
            continue;
        }
        let color = series_color(coupling);

        // +-1 standard deviation band: upper edge forward, lower edge back
        let mut band = String::new();
        for &(m, mean, std) in &points {
            band.push_str(&format!("{:.2},{:.2} ", x_px(m), y_px(mean + std)));
        }
        for &(m, mean, std) in points.iter().rev() {
            band.push_str(&format!("{:.2},{:.2} ", x_px(m), y_px((mean - std).max(0.0))));
        }
        svg.push_str(&format!(
            "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n",
            band.trim_end()
        ));

        let line: Vec<String> = points
            .iter()
            .map(|&(m, mean, _)| format!("{:.2},{:.2}", x_px(m), y_px(mean)))
            .collect();
        svg.push_str(&format!(
            "<polyline class=\"series\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            line.join(" ")
        ));

        // markers: circles for iid, crosses for antithetic
        for &(m, mean, _) in &points {
            let (x, y) = (x_px(m), y_px(mean));
            match coupling {
                Coupling::Iid => svg.push_str(&format!(
                    "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3.5\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n"
                )),
                Coupling::Antithetic => svg.push_str(&format!(
                    "<path d=\"M {:.2} {:.2} L {:.2} {:.2} M {:.2} {:.2} L {:.2} {:.2}\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                    x - 3.5, y - 3.5, x + 3.5, y + 3.5,
                    x - 3.5, y + 3.5, x + 3.5, y - 3.5
                )),
            }
        }
    }

    // legend
    let mut legend_y = MARGIN_TOP + 8.0;
    for &coupling in &couplings {
        let x = MARGIN_LEFT + plot_w - 110.0;
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{legend_y:.2}\" x2=\"{:.2}\" y2=\"{legend_y:.2}\" stroke=\"{}\" stroke-width=\"1.5\"/>\n",
            x + 22.0,
            series_color(coupling)
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"sans-serif\" font-size=\"12\">{coupling}</text>\n",
            x + 28.0,
            legend_y + 4.0
        ));
        legend_y += 18.0;
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Renders and writes the chart.
pub fn emit_plot(report: &ExperimentReport, path: &Path) -> Result<()> {
    let svg = render_svg(report)?;
    std::fs::write(path, svg)?;
    Ok(())
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

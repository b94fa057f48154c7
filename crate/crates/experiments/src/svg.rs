//! Minimal SVG line and scatter plots built from result tables.
//!
//! Plots read only table rows and summary rows; they never compute statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::config::ExperimentKind;
use crate::table::{ResultTable, SummaryRow};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub lines: bool,
    pub series: Vec<Series>,
}

impl Plot {
    pub fn render(&self) -> String {
        let tr = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter().map(|&(x, y)| (x, tr(y))))
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .collect();
        let (x0, x1) = bounds(pts.iter().map(|p| p.0));
        let (y0, y1) = bounds(pts.iter().map(|p| p.1));
        let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
        let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(out, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(&self.title));
        let _ = writeln!(
            out,
            r#"<path d="M{m} {b} H{r} M{m} {b} V{m}" stroke="black" fill="none"/>"#,
            m = MARGIN,
            b = HEIGHT - MARGIN,
            r = WIDTH - MARGIN
        );
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let ylab = if self.log_y { format!("1e{fy:.1}") } else { format!("{fy:.3}") };
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{fx:.3}</text>"#, sx(fx), HEIGHT - MARGIN + 16.0);
            let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{ylab}</text>"#, MARGIN - 6.0, sy(fy) + 4.0);
        }
        let _ = writeln!(out, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, WIDTH / 2.0, HEIGHT - 15.0, escape(&self.x_label));
        let _ = writeln!(
            out,
            r#"<text x="15" y="{y}" text-anchor="middle" transform="rotate(-90 15 {y})">{}</text>"#,
            escape(&self.y_label),
            y = HEIGHT / 2.0
        );
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let visible: Vec<(f64, f64)> = s
                .points
                .iter()
                .map(|&(x, y)| (x, tr(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect();
            if self.lines && visible.len() > 1 {
                let d: Vec<String> = visible.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
                let _ = writeln!(out, r#"<polyline points="{}" stroke="{color}" fill="none" stroke-width="1.5"/>"#, d.join(" "));
            }
            for &(x, y) in &visible {
                let _ = writeln!(out, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
            }
            let ly = MARGIN + 16.0 * k as f64;
            let _ = writeln!(out, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, WIDTH - MARGIN - 110.0, ly - 9.0);
            let _ = writeln!(out, r#"<text x="{}" y="{ly}">{}</text>"#, WIDTH - MARGIN - 95.0, escape(&s.label));
        }
        out.push_str("</svg>\n");
        out
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * hi.abs().max(1.0) {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Series of summary means against the sweep value, one per (estimator, n or sweep) key.
fn summary_series(summary: &[SummaryRow], metric: &str, by_item: bool) -> Vec<Series> {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for s in summary.iter().filter(|s| s.metric == metric) {
        if by_item {
            groups.entry(format!("{} n={}", s.estimator, s.n)).or_default().push((s.item as f64, s.mean));
        } else {
            groups.entry(s.estimator.clone()).or_default().push((s.sweep, s.mean));
        }
    }
    groups
        .into_iter()
        .map(|(label, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points }
        })
        .collect()
}

/// Plots for an experiment as `(file name, svg text)` pairs.
pub fn plots(table: &ResultTable) -> Vec<(String, String)> {
    let summary = table.summary();
    let line = |title: &str, metric: &str, y_label: &str, log_y: bool| Plot {
        title: title.into(),
        x_label: "sweep value".into(),
        y_label: y_label.into(),
        log_y,
        lines: true,
        series: summary_series(&summary, metric, false),
    };
    match table.experiment {
        ExperimentKind::RiskCurve => vec![("risk.svg".into(), line("Quadratic risk", "risk", "mean ||S - Sigma||^2", true).render())],
        ExperimentKind::PowerCurve => vec![
            ("power.svg".into(), line("Power", "reject", "rejection rate", false).render()),
            (
                "conditional.svg".into(),
                line("Shrunk rejects when plain fails", "reject_given_plain_fail", "probability", false).render(),
            ),
        ],
        ExperimentKind::RatioBars => vec![("ratio.svg".into(), line("Observed / null quantile", "h0_h1_ratio", "ratio", false).render())],
        ExperimentKind::SingularStudy => vec![
            ("mse_f.svg".into(), line("Left singular function MSE", "mse_f", "mean squared RKHS error", false).render()),
            ("mse_g.svg".into(), line("Right singular function MSE", "mse_g", "mean squared RKHS error", false).render()),
        ],
        ExperimentKind::Spectra => {
            let plot = Plot {
                title: "Singular values".into(),
                x_label: "index".into(),
                y_label: "mean singular value".into(),
                log_y: true,
                lines: true,
                series: summary_series(&summary, "singular_value", true),
            };
            vec![("spectra.svg".into(), plot.render())]
        }
        ExperimentKind::Scatter => {
            let mut permuted = Vec::new();
            let mut observed = Vec::new();
            let mut plain: BTreeMap<(usize, u64, usize, usize), f64> = BTreeMap::new();
            for r in table.rows.iter().filter(|r| r.metric == "hsic") {
                plain.insert((r.n, r.sweep.to_bits(), r.rep, r.item), r.value);
            }
            for r in table.rows.iter().filter(|r| r.metric == "shrunk") {
                if let Some(&h) = plain.get(&(r.n, r.sweep.to_bits(), r.rep, r.item)) {
                    if r.item == 0 { observed.push((h, r.value)) } else { permuted.push((h, r.value)) }
                }
            }
            let plot = Plot {
                title: "Shrunk versus plain HSIC".into(),
                x_label: "HSIC".into(),
                y_label: "shrunk HSIC".into(),
                log_y: false,
                lines: false,
                series: vec![
                    Series { label: "permuted".into(), points: permuted },
                    Series { label: "observed".into(), points: observed },
                ],
            };
            vec![("scatter.svg".into(), plot.render())]
        }
        ExperimentKind::OracleCheck => {
            let plot = Plot {
                title: "Plug-in LW intensity".into(),
                x_label: "sweep value".into(),
                y_label: "mean rho".into(),
                log_y: false,
                lines: true,
                series: summary_series(&summary, "rho", false),
            };
            vec![("rho.svg".into(), plot.render())]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_document() {
        let p = Plot {
            title: "a < b".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_y: true,
            lines: true,
            series: vec![Series { label: "s".into(), points: vec![(1.0, 1.0), (2.0, 10.0), (3.0, 0.0)] }],
        };
        let svg = p.render();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("a &lt; b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }
}

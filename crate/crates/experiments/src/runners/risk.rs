//! Quadratic risk `E‖S − Σ‖²_HS` of the plain and shrunk estimators.

use kshrink::operators::{combine_distance, hs_norm_sq, CrossGrams};
use kshrink::shrinkage::{fcose_fit, rho_lw, rho_scose, LambdaGrid};

use super::{draw, per_rep, proxy_groups};
use crate::config::ExperimentConfig;
use crate::error::AppResult;
use crate::table::{ResultTable, Row, SummaryRow};

pub const ESTIMATORS: [&str; 4] = ["plain", "lw", "scose", "fcose"];

pub(super) fn run(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    for (proxy, cells) in proxy_groups(cfg)? {
        let truth = &proxy.operator;
        let alpha2 = hs_norm_sq(truth)?;
        for p in cells {
            let rows = per_rep(cfg.repetitions, |rep| {
                let (x, y) = draw(cfg, p, rep)?;
                let plain = proxy.plain(x, y)?;
                let g = plain.gram_pair()?;
                let own = CrossGrams::from_gram_pair(&g);
                let cross = CrossGrams::between(&plain, truth)?;
                let n = p.n;
                let grid = LambdaGrid::Auto(cfg.lambda_grid_points).resolve(&g)?;
                let weights = [
                    plain.weights().to_vec(),
                    rho_lw(&g).weights(n)?,
                    rho_scose(&g).weights(n)?,
                    fcose_fit(&g, &grid)?.weights(n)?,
                ];
                let mut rows = Vec::with_capacity(2 * ESTIMATORS.len());
                for (name, w) in ESTIMATORS.iter().zip(&weights) {
                    let norm = own.inner(w, w).max(0.0);
                    let risk = combine_distance(norm, cross.inner(w, truth.weights()), alpha2)?;
                    rows.push(Row::new(*name, n, p.value, rep, "risk", risk));
                    rows.push(Row::new(*name, n, p.value, rep, "norm_sq", norm));
                }
                Ok(rows)
            })?;
            table.rows.extend(rows);
        }
    }
    table.derived = relative_risk(table);
    Ok(())
}

/// Mean risk of each shrunk estimator divided by the plain mean risk, per cell.
fn relative_risk(table: &ResultTable) -> Vec<SummaryRow> {
    let summary = table.summary();
    let mut out = Vec::new();
    for plain in summary.iter().filter(|s| s.estimator == "plain" && s.metric == "risk") {
        for name in &ESTIMATORS[1..] {
            if let Some(s) = ResultTable::lookup(&summary, name, plain.n, plain.sweep, "risk") {
                out.push(SummaryRow {
                    estimator: name.to_string(),
                    n: plain.n,
                    sweep: plain.sweep,
                    item: 0,
                    metric: "relative_risk".into(),
                    count: s.count,
                    skipped: s.skipped,
                    mean: s.mean / plain.mean,
                    se: f64::NAN,
                    note: String::new(),
                });
            }
        }
    }
    out
}

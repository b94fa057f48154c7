//! Permutation-test experiments: power curves, H0/H1 ratio bars and shrinkage scatter.

use kshrink::hsic::{permutation_test_gram, shrinkage_scatter, PermutationTest, StatisticKind};
use kshrink::kernels::GramPair;
use kshrink::shrinkage::LambdaGrid;

use super::{draw, per_rep, permutation_seed};
use crate::config::{ExperimentConfig, SweepPoint};
use crate::error::AppResult;
use crate::table::{ResultTable, Row, SummaryRow};

/// Conditioning events below this count are flagged as too few to estimate from.
pub const MIN_CONDITIONING_EVENTS: usize = 5;

fn test_config(cfg: &ExperimentConfig, p: SweepPoint, rep: usize) -> PermutationTest {
    PermutationTest {
        permutations: cfg.permutations,
        alpha: cfg.alpha,
        seed: permutation_seed(cfg, p, rep),
        lambda_grid: LambdaGrid::Auto(cfg.lambda_grid_points),
    }
}

/// Gram pair of repetition `rep`, kernels fitted to that sample.
fn sample_grams(cfg: &ExperimentConfig, p: SweepPoint, rep: usize) -> AppResult<GramPair> {
    let (x, y) = draw(cfg, p, rep)?;
    let (kx, ky) = cfg.kernels_for(&x, &y)?;
    Ok(GramPair::from_samples(&x, &y, &kx, &ky)?)
}

/// All four tests per repetition: rejection, p-value, observed statistic and threshold.
fn test_rows(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    for p in cfg.sweep_points() {
        let rows = per_rep(cfg.repetitions, |rep| {
            let g = sample_grams(cfg, p, rep)?;
            let outcomes = permutation_test_gram(&g, &StatisticKind::ALL, &test_config(cfg, p, rep))?;
            let mut rows = Vec::with_capacity(16);
            for o in outcomes {
                let name = o.kind.name();
                rows.push(Row::new(name, p.n, p.value, rep, "reject", if o.rejected { 1.0 } else { 0.0 }));
                rows.push(Row::new(name, p.n, p.value, rep, "p_value", o.p_value));
                rows.push(Row::new(name, p.n, p.value, rep, "observed", o.observed));
                rows.push(Row::new(name, p.n, p.value, rep, "threshold", o.threshold));
            }
            Ok(rows)
        })?;
        table.rows.extend(rows);
    }
    Ok(())
}

pub(super) fn run_power(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    test_rows(cfg, table)?;
    table.derived = conditional_power(table, cfg);
    Ok(())
}

pub(super) fn run_ratio(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    test_rows(cfg, table)?;
    let summary = table.summary();
    let mut derived = Vec::new();
    for p in cfg.sweep_points() {
        for kind in StatisticKind::ALL {
            let obs = ResultTable::lookup(&summary, kind.name(), p.n, p.value, "observed");
            let thr = ResultTable::lookup(&summary, kind.name(), p.n, p.value, "threshold");
            if let (Some(o), Some(t)) = (obs, thr) {
                derived.push(SummaryRow {
                    estimator: kind.name().into(),
                    n: p.n,
                    sweep: p.value,
                    item: 0,
                    metric: "h0_h1_ratio".into(),
                    count: o.count,
                    skipped: o.skipped,
                    mean: o.mean / t.mean,
                    se: f64::NAN,
                    note: String::new(),
                });
            }
        }
    }
    table.derived = derived;
    Ok(())
}

/// `P(shrunk rejects | plain rejects)` and `P(shrunk rejects | plain fails)` per cell.
fn conditional_power(table: &ResultTable, cfg: &ExperimentConfig) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for p in cfg.sweep_points() {
        let decisions = |name: &str| -> Vec<bool> {
            let mut v: Vec<(usize, bool)> = table
                .rows
                .iter()
                .filter(|r| r.estimator == name && r.n == p.n && r.sweep == p.value && r.metric == "reject")
                .map(|r| (r.rep, r.value == 1.0))
                .collect();
            v.sort_by_key(|e| e.0);
            v.into_iter().map(|e| e.1).collect()
        };
        let plain = decisions(StatisticKind::Hsic.name());
        for kind in &StatisticKind::ALL[1..] {
            let shrunk = decisions(kind.name());
            for (metric, plain_outcome) in [("reject_given_plain_reject", true), ("reject_given_plain_fail", false)] {
                let events: Vec<bool> =
                    plain.iter().zip(&shrunk).filter(|(pl, _)| **pl == plain_outcome).map(|(_, s)| *s).collect();
                let count = events.len();
                let hits = events.iter().filter(|&&s| s).count();
                let (mean, se) = if count == 0 {
                    (f64::NAN, f64::NAN)
                } else {
                    let q = hits as f64 / count as f64;
                    (q, (q * (1.0 - q) / count as f64).sqrt())
                };
                out.push(SummaryRow {
                    estimator: kind.name().into(),
                    n: p.n,
                    sweep: p.value,
                    item: 0,
                    metric: metric.into(),
                    count,
                    skipped: 0,
                    mean,
                    se,
                    note: if count < MIN_CONDITIONING_EVENTS { "insufficient".into() } else { String::new() },
                });
            }
        }
    }
    out
}

/// Per permutation `(HSIC, shrunk HSIC)`; item 0 is the unpermuted pair, item `b + 1` permutation `b`.
pub(super) fn run_scatter(cfg: &ExperimentConfig, table: &mut ResultTable) -> AppResult<()> {
    for p in cfg.sweep_points() {
        let rows = per_rep(cfg.repetitions, |rep| {
            let g = sample_grams(cfg, p, rep)?;
            let rec = shrinkage_scatter(&g, cfg.statistic, &test_config(cfg, p, rep))?;
            let name = cfg.statistic.name();
            let pairs = std::iter::once(rec.observed).chain(rec.permuted.iter().copied());
            let mut rows = Vec::with_capacity(2 * (rec.permuted.len() + 1));
            for (item, (plain, shrunk)) in pairs.enumerate() {
                rows.push(Row::new(name, p.n, p.value, rep, "hsic", plain).with_item(item));
                rows.push(Row::new(name, p.n, p.value, rep, "shrunk", shrunk).with_item(item));
            }
            Ok(rows)
        })?;
        table.rows.extend(rows);
    }
    Ok(())
}

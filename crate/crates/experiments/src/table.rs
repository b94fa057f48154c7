//! Long-format result tables and their CSV encoding.
//!
//! `results.csv` holds one row per (estimator, sweep cell, repetition, item,
//! metric). `item` indexes within-repetition series such as permutations or
//! singular values and is 0 otherwise. Both files start with a `#` metadata
//! block naming the experiment, the config hash, the seed and the version.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::{AppError, AppResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub estimator: String,
    pub n: usize,
    pub sweep: f64,
    pub rep: usize,
    pub item: usize,
    pub metric: String,
    pub value: f64,
}

impl Row {
    pub fn new(estimator: impl Into<String>, n: usize, sweep: f64, rep: usize, metric: impl Into<String>, value: f64) -> Self {
        Row { estimator: estimator.into(), n, sweep, rep, item: 0, metric: metric.into(), value }
    }

    pub fn with_item(mut self, item: usize) -> Self {
        self.item = item;
        self
    }
}

/// Aggregate over repetitions. Non-finite values are counted as skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub estimator: String,
    pub n: usize,
    pub sweep: f64,
    pub item: usize,
    pub metric: String,
    pub count: usize,
    pub skipped: usize,
    pub mean: f64,
    pub se: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub seed: u64,
    pub rows: Vec<Row>,
    /// Experiment-specific aggregates appended after the generic ones.
    pub derived: Vec<SummaryRow>,
}

impl ResultTable {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        ResultTable { experiment: cfg.experiment, config_hash: cfg.hash(), seed: cfg.seed, rows: Vec::new(), derived: Vec::new() }
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.sweep.total_cmp(&b.sweep))
                .then_with(|| a.estimator.cmp(&b.estimator))
                .then_with(|| a.metric.cmp(&b.metric))
                .then(a.rep.cmp(&b.rep))
                .then(a.item.cmp(&b.item))
        });
    }

    /// Mean and standard error per (estimator, n, sweep, item, metric), followed by derived rows.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(String, usize, u64, usize, String), (f64, Vec<f64>, usize)> = BTreeMap::new();
        for r in &self.rows {
            let key = (r.estimator.clone(), r.n, ordered_bits(r.sweep), r.item, r.metric.clone());
            let entry = groups.entry(key).or_insert((r.sweep, Vec::new(), 0));
            if r.value.is_finite() {
                entry.1.push(r.value);
            } else {
                entry.2 += 1;
            }
        }
        let mut out: Vec<SummaryRow> = groups
            .into_iter()
            .map(|((estimator, n, _, item, metric), (sweep, values, skipped))| {
                let (mean, se) = mean_se(&values);
                SummaryRow { estimator, n, sweep, item, metric, count: values.len(), skipped, mean, se, note: String::new() }
            })
            .collect();
        out.sort_by(|a, b| {
            a.n.cmp(&b.n)
                .then(a.sweep.total_cmp(&b.sweep))
                .then_with(|| a.estimator.cmp(&b.estimator))
                .then_with(|| a.metric.cmp(&b.metric))
                .then(a.item.cmp(&b.item))
        });
        out.extend(self.derived.iter().cloned());
        out
    }

    /// Summary entry for an exact (estimator, n, sweep, metric) with item 0.
    pub fn lookup<'a>(summary: &'a [SummaryRow], estimator: &str, n: usize, sweep: f64, metric: &str) -> Option<&'a SummaryRow> {
        summary
            .iter()
            .find(|s| s.estimator == estimator && s.n == n && s.sweep == sweep && s.metric == metric && s.item == 0)
    }

    fn header(&self) -> String {
        format!(
            "# kshrink experiment results\n# experiment: {}\n# config_sha256: {}\n# seed: {}\n# version: {}\n",
            self.experiment, self.config_hash, self.seed, VERSION
        )
    }

    pub fn results_csv(&self) -> AppResult<Vec<u8>> {
        let mut out = self.header().into_bytes();
        let short = &self.config_hash[..16];
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| AppError::Runtime(format!("csv encoding failed: {e}"));
        w.write_record(["config", "experiment", "estimator", "n", "sweep", "rep", "item", "metric", "value"]).map_err(io)?;
        for r in &self.rows {
            w.write_record([
                short,
                self.experiment.name(),
                &r.estimator,
                &r.n.to_string(),
                &r.sweep.to_string(),
                &r.rep.to_string(),
                &r.item.to_string(),
                &r.metric,
                &r.value.to_string(),
            ])
            .map_err(io)?;
        }
        out.extend(w.into_inner().map_err(|e| AppError::Runtime(e.to_string()))?);
        Ok(out)
    }

    pub fn summary_csv(&self) -> AppResult<Vec<u8>> {
        let mut out = self.header().into_bytes();
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| AppError::Runtime(format!("csv encoding failed: {e}"));
        w.write_record(["estimator", "n", "sweep", "item", "metric", "count", "skipped", "mean", "se", "note"]).map_err(io)?;
        for s in self.summary() {
            w.write_record([
                &s.estimator,
                &s.n.to_string(),
                &s.sweep.to_string(),
                &s.item.to_string(),
                &s.metric,
                &s.count.to_string(),
                &s.skipped.to_string(),
                &s.mean.to_string(),
                &s.se.to_string(),
                &s.note,
            ])
            .map_err(io)?;
        }
        out.extend(w.into_inner().map_err(|e| AppError::Runtime(e.to_string()))?);
        Ok(out)
    }
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> AppResult<()> {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)
        .map_err(|e| AppError::Input(format!("cannot write {}: {e}", path.display())))?;
    f.write_all(bytes).map_err(|e| AppError::Input(format!("cannot write {}: {e}", path.display())))
}

/// Sample mean and standard error; NaN where undefined.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Order-preserving key for grouping by a float.
fn ordered_bits(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

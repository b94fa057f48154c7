//! Seeded Monte Carlo drivers, one per experiment kind.
//!
//! Every random draw comes from a stream derived from the config seed and
//! a fixed tag path, so results do not depend on scheduling:
//!
//! | draw                         | tags                                  |
//! |------------------------------|---------------------------------------|
//! | sample of repetition `r`     | `[cell, SAMPLE, r]`                   |
//! | proxy for parameter value `j`| `[PROXY_BASE + j]`                    |
//! | permutations of repetition `r`| `[cell, PERMUTATIONS, r]`            |
//!
//! `cell` is the sweep-cell index. Proxies depend only on the distribution
//! parameter, so all sample sizes of one parameter value share one proxy.

mod oracle;
mod risk;
mod singular;
mod spectra;
mod testing;

use std::sync::Arc;

use kshrink::kernels::{KernelSpec, SampleSet};
use kshrink::operators::EmpiricalOperator;
use kshrink::rng::derive_seed;
use kshrink::synthdata;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, ExperimentKind, SweepPoint};
use crate::error::{AppError, AppResult};
use crate::table::{ResultTable, Row};

const SAMPLE: u64 = 0;
const PERMUTATIONS: u64 = 2;
const PROXY_BASE: u64 = 1 << 32;

/// Runs the configured experiment on a pool of `workers` threads (0 = all cores).
pub fn run(cfg: &ExperimentConfig, workers: usize) -> AppResult<ResultTable> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| AppError::Runtime(format!("cannot start worker pool: {e}")))?;
    let mut table = ResultTable::new(cfg);
    pool.install(|| match cfg.experiment {
        ExperimentKind::RiskCurve => risk::run(cfg, &mut table),
        ExperimentKind::PowerCurve => testing::run_power(cfg, &mut table),
        ExperimentKind::RatioBars => testing::run_ratio(cfg, &mut table),
        ExperimentKind::Scatter => testing::run_scatter(cfg, &mut table),
        ExperimentKind::Spectra => spectra::run(cfg, &mut table),
        ExperimentKind::SingularStudy => singular::run(cfg, &mut table),
        ExperimentKind::OracleCheck => oracle::run(cfg, &mut table),
    })?;
    table.sort();
    Ok(table)
}

fn sample_seed(cfg: &ExperimentConfig, p: SweepPoint, rep: usize) -> u64 {
    derive_seed(cfg.seed, &[p.index as u64, SAMPLE, rep as u64])
}

fn permutation_seed(cfg: &ExperimentConfig, p: SweepPoint, rep: usize) -> u64 {
    derive_seed(cfg.seed, &[p.index as u64, PERMUTATIONS, rep as u64])
}

fn draw(cfg: &ExperimentConfig, p: SweepPoint, rep: usize) -> AppResult<(Arc<SampleSet>, Arc<SampleSet>)> {
    let (x, y) = synthdata::sample(&cfg.distribution_at(p), p.n, sample_seed(cfg, p, rep))?;
    Ok(share_if_equal(x, y))
}

/// Shares one allocation when `y` duplicates `x`, which lets spectra reuse one square root.
fn share_if_equal(x: SampleSet, y: SampleSet) -> (Arc<SampleSet>, Arc<SampleSet>) {
    let x = Arc::new(x);
    if *x == y {
        (x.clone(), x)
    } else {
        (x, Arc::new(y))
    }
}

/// Large reference sample standing in for the population, with kernels fixed on it.
struct Proxy {
    operator: EmpiricalOperator,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
}

impl Proxy {
    fn build(cfg: &ExperimentConfig, p: SweepPoint) -> AppResult<Self> {
        let seed = derive_seed(cfg.seed, &[PROXY_BASE + p.param_index as u64]);
        let (x, y) = synthdata::sample(&cfg.distribution_at(p), cfg.proxy_n, seed)?;
        let (x_kernel, y_kernel) = cfg.kernels_for(&x, &y)?;
        let (x, y) = share_if_equal(x, y);
        let operator = EmpiricalOperator::plain(x, y, x_kernel, y_kernel)?;
        Ok(Proxy { operator, x_kernel, y_kernel })
    }

    fn plain(&self, x: Arc<SampleSet>, y: Arc<SampleSet>) -> AppResult<EmpiricalOperator> {
        Ok(EmpiricalOperator::plain(x, y, self.x_kernel, self.y_kernel)?)
    }
}

/// Sweep cells grouped by parameter value, each group with its proxy.
fn proxy_groups(cfg: &ExperimentConfig) -> AppResult<Vec<(Proxy, Vec<SweepPoint>)>> {
    let points = cfg.sweep_points();
    let mut groups: Vec<(Proxy, Vec<SweepPoint>)> = Vec::new();
    for p in points {
        match groups.last_mut() {
            Some((_, cells)) if cells[0].param_index == p.param_index => cells.push(p),
            _ => groups.push((Proxy::build(cfg, p)?, vec![p])),
        }
    }
    Ok(groups)
}

/// Evaluates `f` for every repetition in parallel, keeping repetition order.
fn per_rep<F>(reps: usize, f: F) -> AppResult<Vec<Row>>
where
    F: Fn(usize) -> AppResult<Vec<Row>> + Sync + Send,
{
    let chunks: AppResult<Vec<Vec<Row>>> = (0..reps).into_par_iter().map(f).collect();
    Ok(chunks?.into_iter().flatten().collect())
}

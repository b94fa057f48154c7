//! Monte Carlo estimates of the oracle shrinkage constants.
//!
//! With `Σ` approximated by the plain operator on a large proxy sample,
//! `α² = ‖Σ‖²`, `β² = E‖S_XY − Σ‖²` and `δ² = E‖S_XY‖²` are averaged over
//! repeated draws. The oracle intensity is `β²/δ²`.

use std::sync::Arc;

use super::rho_lw;
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::operators::{combine_distance, hs_norm_sq, CrossGrams, EmpiricalOperator};
use crate::rng::derive_seed;
use crate::synthdata::{self, DistributionSpec};

/// Reference operator drawn once and reused by every repetition.
#[derive(Debug, Clone)]
pub struct OracleProxy {
    dist: DistributionSpec,
    operator: EmpiricalOperator,
    alpha2: f64,
    seed: u64,
}

/// One repetition: `‖S‖²`, `‖S − Σ‖²` and the plug-in `ρ^{LW}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleDraw {
    pub norm_sq: f64,
    pub dist_sq: f64,
    pub rho_lw: f64,
}

impl OracleProxy {
    /// The proxy sample uses `derive_seed(seed, [0])`.
    pub fn new(dist: &DistributionSpec, x_kernel: KernelSpec, y_kernel: KernelSpec, proxy_n: usize, seed: u64) -> Result<Self> {
        let (px, py) = synthdata::sample(dist, proxy_n, derive_seed(seed, &[0]))?;
        let operator = EmpiricalOperator::plain(Arc::new(px), Arc::new(py), x_kernel, y_kernel)?;
        Self::from_operator(dist, operator, seed)
    }

    /// Uses an existing plain operator as `Σ`; repetitions are still drawn from `dist`.
    pub fn from_operator(dist: &DistributionSpec, operator: EmpiricalOperator, seed: u64) -> Result<Self> {
        let alpha2 = hs_norm_sq(&operator)?;
        Ok(OracleProxy { dist: dist.clone(), operator, alpha2, seed })
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn proxy_n(&self) -> usize {
        self.operator.n()
    }

    /// Repetition `r` draws its sample with `derive_seed(seed, [1, r])`.
    pub fn draw(&self, n: usize, r: usize) -> Result<OracleDraw> {
        let (x, y) = synthdata::sample(&self.dist, n, derive_seed(self.seed, &[1, r as u64]))?;
        let s = EmpiricalOperator::plain(Arc::new(x), Arc::new(y), self.operator.x_kernel(), self.operator.y_kernel())?;
        let g = s.gram_pair()?;
        let norm_sq = CrossGrams::from_gram_pair(&g).inner(s.weights(), s.weights()).max(0.0);
        let inner = CrossGrams::between(&s, &self.operator)?.inner(s.weights(), self.operator.weights());
        Ok(OracleDraw {
            norm_sq,
            dist_sq: combine_distance(norm_sq, inner, self.alpha2)?,
            rho_lw: rho_lw(&g).rho.expect("LW carries rho"),
        })
    }

    pub fn report(&self, draws: &[OracleDraw]) -> Result<OracleReport> {
        if draws.len() < 100 {
            return Err(Error::InvalidInput(format!("oracle check needs at least 100 repetitions, got {}", draws.len())));
        }
        let norms: Vec<f64> = draws.iter().map(|d| d.norm_sq).collect();
        let dists: Vec<f64> = draws.iter().map(|d| d.dist_sq).collect();
        let rhos: Vec<f64> = draws.iter().map(|d| d.rho_lw).collect();
        let gaps: Vec<f64> = draws.iter().map(|d| self.alpha2 + d.dist_sq - d.norm_sq).collect();
        let (beta2, beta2_se) = mean_se(&dists);
        let (delta2, delta2_se) = mean_se(&norms);
        let (identity_gap, identity_gap_se) = mean_se(&gaps);
        let (mean_rho_lw, rho_lw_se) = mean_se(&rhos);
        Ok(OracleReport {
            reps: draws.len(),
            alpha2: self.alpha2,
            beta2,
            beta2_se,
            delta2,
            delta2_se,
            identity_gap,
            identity_gap_se,
            oracle_rho: if delta2 > 0.0 { beta2 / delta2 } else { 1.0 },
            mean_rho_lw,
            rho_lw_se,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub reps: usize,
    pub alpha2: f64,
    pub beta2: f64,
    pub beta2_se: f64,
    pub delta2: f64,
    pub delta2_se: f64,
    /// Mean over repetitions of `α² + ‖S − Σ‖² − ‖S‖²`.
    pub identity_gap: f64,
    pub identity_gap_se: f64,
    pub oracle_rho: f64,
    pub mean_rho_lw: f64,
    pub rho_lw_se: f64,
}

pub fn mc_oracle_check(
    dist: &DistributionSpec,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    n: usize,
    reps: usize,
    proxy_n: usize,
    seed: u64,
) -> Result<OracleReport> {
    if reps < 100 {
        return Err(Error::InvalidInput(format!("oracle check needs at least 100 repetitions, got {reps}")));
    }
    if proxy_n <= n {
        return Err(Error::InvalidInput("proxy sample must be larger than n".into()));
    }
    let proxy = OracleProxy::new(dist, x_kernel, y_kernel, proxy_n, seed)?;
    let draws = (0..reps).map(|r| proxy.draw(n, r)).collect::<Result<Vec<_>>>()?;
    proxy.report(&draws)
}

/// Sample mean and its standard error.
fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

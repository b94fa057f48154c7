//! Shrinkage of the sample cross-covariance operator toward the zero operator.
//!
//! All three estimators are computed from the centered grams alone:
//!
//! * `d² = (1/n²) Σ_ij K̃_ij L̃_ij` (the squared HS norm of `S_XY`),
//! * `b² = (1/n) [(1/n) Σ_i K̃_ii L̃_ii − d²]` (its estimated variance),
//! * LW: `ρ = b²/d²`, SCOSE: `ρ = n·b² / ((n−2)d² + (1/n)Σ_i K̃_ii L̃_ii)`,
//!   both applied as `(1 − ρ)₊ S_XY`,
//! * FCOSE: per-point weights `β/n` with `β = (K̃∘L̃ + λI)⁻¹ (K̃∘L̃) 1`.

mod fcose;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::GramPair;
use crate::operators::EmpiricalOperator;

pub use fcose::{default_lambda_grid, DEFAULT_GRID_POINTS, fcose_beta, fcose_fit, fcose_loocv_bruteforce, FcoseSolver, LambdaGrid};
pub use oracle::{mc_oracle_check, OracleDraw, OracleProxy, OracleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShrinkageKind {
    Lw,
    Scose,
    Fcose,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkageResult {
    pub kind: ShrinkageKind,
    /// Intensity in `[0, 1]` for LW and SCOSE.
    pub rho: Option<f64>,
    /// Per-point weights (before the `1/n` factor) for FCOSE.
    pub beta: Option<Vec<f64>>,
    /// Regularization selected for FCOSE.
    pub lambda: Option<f64>,
    /// Whether the unclamped multiplier `1 − ρ` was negative.
    pub clamped: bool,
    pub d2: f64,
    pub b2: f64,
}

impl ShrinkageResult {
    /// Operator weights: `(1 − ρ)/n` for linear shrinkage, `β_i/n` for FCOSE.
    pub fn weights(&self, n: usize) -> Result<Vec<f64>> {
        let nf = n as f64;
        match (self.rho, &self.beta) {
            (Some(rho), None) => Ok(vec![(1.0 - rho) / nf; n]),
            (None, Some(beta)) => {
                if beta.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, actual: beta.len() });
                }
                Ok(beta.iter().map(|b| b / nf).collect())
            }
            _ => Err(Error::InvalidInput("shrinkage result carries neither rho nor beta".into())),
        }
    }

    /// Multiplier `(1 − ρ)` applied to `S_XY` by linear shrinkage.
    pub fn multiplier(&self) -> Option<f64> {
        self.rho.map(|r| 1.0 - r)
    }
}

pub fn d2(g: &GramPair) -> f64 {
    let n = g.n() as f64;
    (g.frobenius_inner() / (n * n)).max(0.0)
}

/// Estimated variance of `S_XY`, clipped at zero.
pub fn b2(g: &GramPair) -> f64 {
    let n = g.n() as f64;
    let raw = (g.diag_inner() / n - g.frobenius_inner() / (n * n)) / n;
    raw.max(0.0)
}

pub fn rho_lw(g: &GramPair) -> ShrinkageResult {
    let (d2, b2) = (d2(g), b2(g));
    let (rho, clamped) = if d2 > 0.0 {
        let raw = b2 / d2;
        (raw.min(1.0), raw > 1.0)
    } else {
        (1.0, b2 > d2)
    };
    ShrinkageResult { kind: ShrinkageKind::Lw, rho: Some(rho), beta: None, lambda: None, clamped, d2, b2 }
}

pub fn rho_scose(g: &GramPair) -> ShrinkageResult {
    let n = g.n() as f64;
    let (d2, b2) = (d2(g), b2(g));
    let diag_mean = g.diag_inner() / n;
    let numerator = n * b2;
    let denominator = (n - 2.0) * d2 + diag_mean / n;
    let (rho, clamped) = if denominator > 0.0 {
        let raw = numerator / denominator;
        (raw.clamp(0.0, 1.0), raw > 1.0)
    } else {
        (1.0, true)
    };
    ShrinkageResult { kind: ShrinkageKind::Scose, rho: Some(rho), beta: None, lambda: None, clamped, d2, b2 }
}

/// Reweights `plain` (which must carry `S_XY`'s samples) by the shrinkage result.
pub fn apply_shrinkage(plain: &EmpiricalOperator, result: &ShrinkageResult) -> Result<EmpiricalOperator> {
    plain.with_weights(result.weights(plain.n())?)
}

//! HSIC statistics, plain and shrunk, and permutation independence tests.
//!
//! Every statistic is the squared HS norm of an estimated cross-covariance
//! operator: `HSIC_n = ‖S_XY‖² = (1/n²) tr(K̃L̃)`, the LW and SCOSE variants
//! are `(1 − ρ)₊² HSIC_n`, and the FCOSE variant is `(1/n²) βᵀ(K̃∘L̃)β`.
//! Because ρ depends on the diagonal interaction `Σ_i K̃_ii L̃_ii` and not
//! only on `HSIC_n`, shrinkage is not a monotone function of `HSIC_n` and
//! can change the permutation test's decision.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{GramPair, KernelSpec, SampleSet};
use crate::linalg::quantile_linear;
use crate::rng;
use crate::shrinkage::{self, FcoseSolver, LambdaGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatisticKind {
    Hsic,
    HsicLw,
    HsicS,
    HsicF,
}

impl StatisticKind {
    pub const ALL: [StatisticKind; 4] =
        [StatisticKind::Hsic, StatisticKind::HsicLw, StatisticKind::HsicS, StatisticKind::HsicF];

    pub fn name(self) -> &'static str {
        match self {
            StatisticKind::Hsic => "hsic",
            StatisticKind::HsicLw => "hsic_lw",
            StatisticKind::HsicS => "hsic_s",
            StatisticKind::HsicF => "hsic_f",
        }
    }

    pub fn is_shrunk(self) -> bool {
        self != StatisticKind::Hsic
    }
}

impl fmt::Display for StatisticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatisticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hsic" | "plain" => Ok(StatisticKind::Hsic),
            "lw" | "hsic_lw" => Ok(StatisticKind::HsicLw),
            "s" | "scose" | "hsic_s" => Ok(StatisticKind::HsicS),
            "f" | "fcose" | "hsic_f" => Ok(StatisticKind::HsicF),
            other => Err(Error::InvalidInput(format!("unknown statistic kind '{other}'"))),
        }
    }
}

pub fn hsic_n(g: &GramPair) -> f64 {
    shrinkage::d2(g)
}

/// `(1 − ρ_LW)₊² HSIC_n`; zero when `HSIC_n = 0`.
pub fn hsic_lw(g: &GramPair) -> f64 {
    let r = shrinkage::rho_lw(g);
    let m = r.multiplier().expect("LW carries rho");
    m * m * r.d2
}

/// `(1 − ρ_S)₊² HSIC_n`.
pub fn hsic_scose(g: &GramPair) -> f64 {
    let r = shrinkage::rho_scose(g);
    let m = r.multiplier().expect("SCOSE carries rho");
    m * m * r.d2
}

/// `‖S^F‖²_HS = (1/n²) βᵀMβ` for a fixed λ.
pub fn hsic_fcose(g: &GramPair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(fcose_norm(&FcoseSolver::new(g), lambda))
}

/// FCOSE statistic with λ chosen by LOOCV over `grid`.
pub fn hsic_fcose_fitted(g: &GramPair, grid: &[f64]) -> Result<(f64, f64)> {
    let solver = FcoseSolver::new(g);
    let (lambda, _) = solver.select(grid)?;
    Ok((fcose_norm(&solver, lambda), lambda))
}

/// The trace expression `(1/n²) tr(M (M+λI)⁻¹ M (M+λI)⁻¹ M)`.
///
/// Kept for comparison only: it is not the squared norm of the FCOSE
/// operator (on `x = y = (0, 1, 2)` with linear kernels and λ = 1 it gives
/// 8/81 where the operator norm is 16/81).
pub fn hsic_fcose_trace_form(g: &GramPair, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let n = g.n() as f64;
    let eig = nalgebra::SymmetricEigen::new(g.hadamard());
    let tr: f64 = eig.eigenvalues.iter().map(|&e| e * e * e / ((e + lambda) * (e + lambda))).sum();
    Ok(tr / (n * n))
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("lambda must be positive and finite, got {lambda}")))
    }
}

fn fcose_norm(solver: &FcoseSolver, lambda: f64) -> f64 {
    let n = solver.n() as f64;
    let beta = solver.beta(lambda);
    let quad = beta.dot(&(solver.hadamard() * &beta));
    (quad / (n * n)).max(0.0)
}

/// Value of one statistic; `grid` is only used by FCOSE.
pub fn statistic(g: &GramPair, kind: StatisticKind, grid: &[f64]) -> Result<f64> {
    Ok(match kind {
        StatisticKind::Hsic => hsic_n(g),
        StatisticKind::HsicLw => hsic_lw(g),
        StatisticKind::HsicS => hsic_scose(g),
        StatisticKind::HsicF => hsic_fcose_fitted(g, grid)?.0,
    })
}

/// Permutation test settings.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationTest {
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub lambda_grid: LambdaGrid,
}

impl PermutationTest {
    pub fn new(permutations: usize, alpha: f64, seed: u64) -> Self {
        PermutationTest { permutations, alpha, seed, lambda_grid: LambdaGrid::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.permutations < 1 {
            return Err(Error::InvalidInput("at least one permutation is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidInput(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }

    /// The permutation applied to the y-sample in round `b`.
    pub fn permutation(&self, n: usize, b: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng::stream(self.seed, &[b as u64]));
        perm
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub kind: StatisticKind,
    pub observed: f64,
    pub null_samples: Vec<f64>,
    /// `(1 + #{null ≥ observed}) / (B + 1)`.
    pub p_value: f64,
    /// Empirical `(1 − α)` quantile of the null samples (linear interpolation).
    pub threshold: f64,
    pub alpha: f64,
    /// `observed > threshold`.
    pub rejected: bool,
    /// Set when `B < 1/α − 1`, too few permutations to reject at level α.
    pub insufficient_permutations: bool,
    /// λ selected on the unpermuted data (FCOSE only).
    pub lambda: Option<f64>,
}

impl TestOutcome {
    fn from_samples(kind: StatisticKind, observed: f64, null_samples: Vec<f64>, alpha: f64, lambda: Option<f64>) -> Self {
        let b = null_samples.len();
        let exceed = null_samples.iter().filter(|&&v| v >= observed).count();
        let threshold = quantile_linear(&null_samples, 1.0 - alpha);
        TestOutcome {
            kind,
            observed,
            p_value: (1 + exceed) as f64 / (b + 1) as f64,
            threshold,
            alpha,
            rejected: observed > threshold,
            insufficient_permutations: (b as f64) < 1.0 / alpha - 1.0,
            null_samples,
            lambda,
        }
    }
}

/// Runs one permutation test per requested kind on a shared set of permutations.
///
/// `K̃` stays fixed and `L̃` is conjugated by each permutation. FCOSE re-selects
/// λ on every permuted sample using the grid resolved on the unpermuted data.
pub fn permutation_test_gram(g: &GramPair, kinds: &[StatisticKind], cfg: &PermutationTest) -> Result<Vec<TestOutcome>> {
    cfg.validate()?;
    let needs_fcose = kinds.contains(&StatisticKind::HsicF);
    let grid = if needs_fcose { cfg.lambda_grid.resolve(g)? } else { Vec::new() };

    let evaluate = |pair: &GramPair| -> Result<(Vec<f64>, Option<f64>)> {
        let fcose = if needs_fcose {
            let solver = FcoseSolver::new(pair);
            let (lambda, _) = solver.select(&grid)?;
            Some((fcose_norm(&solver, lambda), lambda))
        } else {
            None
        };
        let values = kinds
            .iter()
            .map(|k| match k {
                StatisticKind::Hsic => hsic_n(pair),
                StatisticKind::HsicLw => hsic_lw(pair),
                StatisticKind::HsicS => hsic_scose(pair),
                StatisticKind::HsicF => fcose.expect("computed above").0,
            })
            .collect();
        Ok((values, fcose.map(|f| f.1)))
    };

    let (observed, lambda) = evaluate(g)?;
    let mut nulls = vec![Vec::with_capacity(cfg.permutations); kinds.len()];
    for b in 0..cfg.permutations {
        let permuted = g.permute_l(&cfg.permutation(g.n(), b));
        let (values, _) = evaluate(&permuted)?;
        for (null, v) in nulls.iter_mut().zip(values) {
            null.push(v);
        }
    }
    Ok(kinds
        .iter()
        .zip(observed)
        .zip(nulls)
        .map(|((&kind, obs), null)| {
            let lam = if kind == StatisticKind::HsicF { lambda } else { None };
            TestOutcome::from_samples(kind, obs, null, cfg.alpha, lam)
        })
        .collect())
}

pub fn permutation_test(
    x: &SampleSet,
    y: &SampleSet,
    x_kernel: &KernelSpec,
    y_kernel: &KernelSpec,
    kind: StatisticKind,
    cfg: &PermutationTest,
) -> Result<TestOutcome> {
    let g = GramPair::from_samples(x, y, x_kernel, y_kernel)?;
    Ok(permutation_test_gram(&g, &[kind], cfg)?.remove(0))
}

/// All four statistics tested on the same permutations.
pub fn permutation_test_all(
    x: &SampleSet,
    y: &SampleSet,
    x_kernel: &KernelSpec,
    y_kernel: &KernelSpec,
    cfg: &PermutationTest,
) -> Result<Vec<TestOutcome>> {
    let g = GramPair::from_samples(x, y, x_kernel, y_kernel)?;
    permutation_test_gram(&g, &StatisticKind::ALL, cfg)
}

/// Unshrunk vs shrunk HSIC for the unpermuted sample and every permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterRecord {
    pub kind: StatisticKind,
    /// `(HSIC_n, shrunk)` on the original pairing.
    pub observed: (f64, f64),
    pub permuted: Vec<(f64, f64)>,
}

pub fn shrinkage_scatter(g: &GramPair, kind: StatisticKind, cfg: &PermutationTest) -> Result<ScatterRecord> {
    let out = permutation_test_gram(g, &[StatisticKind::Hsic, kind], cfg)?;
    let (plain, shrunk) = (&out[0], &out[1]);
    Ok(ScatterRecord {
        kind,
        observed: (plain.observed, shrunk.observed),
        permuted: plain.null_samples.iter().copied().zip(shrunk.null_samples.iter().copied()).collect(),
    })
}

/// Per kind, `mean(observed) / mean(threshold)` over repeated tests.
///
/// Each element of `runs` holds the outcomes of one repetition.
pub fn h0_h1_ratio(runs: &[Vec<TestOutcome>]) -> Vec<(StatisticKind, f64)> {
    let Some(first) = runs.first() else {
        return Vec::new();
    };
    first
        .iter()
        .map(|o| o.kind)
        .map(|kind| {
            let (mut obs, mut thr, mut count) = (0.0, 0.0, 0usize);
            for run in runs {
                if let Some(o) = run.iter().find(|o| o.kind == kind) {
                    obs += o.observed;
                    thr += o.threshold;
                    count += 1;
                }
            }
            let ratio = if thr > 0.0 {
                obs / thr
            } else if obs > 0.0 {
                f64::INFINITY
            } else {
                f64::NAN
            };
            debug_assert!(count > 0);
            (kind, ratio)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(x: &[f64], y: &[f64]) -> GramPair {
        let xs = SampleSet::from_scalars(x).unwrap();
        let ys = SampleSet::from_scalars(y).unwrap();
        GramPair::from_samples(&xs, &ys, &KernelSpec::Linear, &KernelSpec::Linear).unwrap()
    }

    #[test]
    fn three_point_statistics() {
        let g = pair(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]);
        assert!((hsic_n(&g) - 4.0 / 9.0).abs() < 1e-15);
        assert!((hsic_lw(&g) - 100.0 / 324.0).abs() < 1e-15);
        assert!((hsic_scose(&g) - 16.0 / 81.0).abs() < 1e-15);
        assert!((hsic_fcose(&g, 1.0).unwrap() - 16.0 / 81.0).abs() < 1e-14);
        assert!((hsic_fcose_trace_form(&g, 1.0).unwrap() - 8.0 / 81.0).abs() < 1e-14);
    }

    #[test]
    fn two_point_and_constant() {
        let g = pair(&[0.0, 1.0], &[0.0, 1.0]);
        assert!((hsic_n(&g) - 0.0625).abs() < 1e-15);
        assert!((hsic_lw(&g) - hsic_n(&g)).abs() < 1e-15);
        let g = pair(&[0.0, 1.0, 2.0], &[3.0, 3.0, 3.0]);
        assert_eq!(hsic_n(&g), 0.0);
        assert_eq!(hsic_lw(&g), 0.0);
        assert_eq!(hsic_scose(&g), 0.0);
    }

    #[test]
    fn clamped_statistics_vanish() {
        let g = pair(&[0.0, 1.0, 2.0], &[1.1, -2.0, 0.9]);
        assert!(hsic_n(&g) > 0.0);
        assert_eq!(hsic_lw(&g), 0.0);
        assert_eq!(hsic_scose(&g), 0.0);
    }

    #[test]
    fn fcose_limits() {
        let x = SampleSet::new(vec![vec![0.1, 0.4], vec![1.3, -0.2], vec![-0.7, 0.9], vec![0.5, 0.5]]).unwrap();
        let y = SampleSet::from_scalars(&[0.3, -1.0, 0.8, 2.0]).unwrap();
        let g = KernelSpec::gaussian(0.9).unwrap();
        let gp = GramPair::from_samples(&x, &y, &g, &g).unwrap();
        assert!(hsic_fcose(&gp, 1e12).unwrap() < 1e-20);
        assert!((hsic_fcose(&gp, 1e-12).unwrap() - hsic_n(&gp)).abs() < 1e-6 * hsic_n(&gp));
        assert!(hsic_fcose(&gp, 0.0).is_err());
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("lw".parse::<StatisticKind>().unwrap(), StatisticKind::HsicLw);
        assert_eq!("FCOSE".parse::<StatisticKind>().unwrap(), StatisticKind::HsicF);
        assert!("nope".parse::<StatisticKind>().is_err());
    }

    #[test]
    fn p_value_and_threshold_rules() {
        let o = TestOutcome::from_samples(StatisticKind::Hsic, 2.0, vec![1.0, 2.0, 3.0, 0.5], 0.25, None);
        assert_eq!(o.p_value, 3.0 / 5.0);
        // sorted [0.5, 1, 2, 3], position 3·0.75 = 2.25
        assert!((o.threshold - 2.25).abs() < 1e-15);
        assert!(!o.rejected);
        assert!(!o.insufficient_permutations);
        let o = TestOutcome::from_samples(StatisticKind::Hsic, 9.0, vec![1.0; 10], 0.05, None);
        assert_eq!(o.p_value, 1.0 / 11.0);
        assert!(o.rejected);
        assert!(o.insufficient_permutations);
    }

    #[test]
    fn identity_permutation_reproduces_observed() {
        let g = pair(&[0.2, 1.0, 2.5, -0.4, 0.9], &[1.0, 0.1, 2.2, -1.0, 0.3]);
        let ident: Vec<usize> = (0..5).collect();
        let same = g.permute_l(&ident);
        for kind in StatisticKind::ALL {
            let grid = LambdaGrid::default().resolve(&g).unwrap();
            assert_eq!(statistic(&g, kind, &grid).unwrap(), statistic(&same, kind, &grid).unwrap());
        }
    }

    #[test]
    fn permutation_test_is_seeded() {
        let x = SampleSet::from_scalars(&[0.2, 1.0, 2.5, -0.4, 0.9, 1.7]).unwrap();
        let y = SampleSet::from_scalars(&[1.0, 0.1, 2.2, -1.0, 0.3, 0.8]).unwrap();
        let cfg = PermutationTest::new(30, 0.1, 5);
        let a = permutation_test_all(&x, &y, &KernelSpec::Linear, &KernelSpec::Linear, &cfg).unwrap();
        let b = permutation_test_all(&x, &y, &KernelSpec::Linear, &KernelSpec::Linear, &cfg).unwrap();
        assert_eq!(a, b);
        let single =
            permutation_test(&x, &y, &KernelSpec::Linear, &KernelSpec::Linear, StatisticKind::HsicLw, &cfg).unwrap();
        assert_eq!(single, a[1]);
        assert!(a[3].lambda.is_some());
        assert!(permutation_test(&x, &y, &KernelSpec::Linear, &KernelSpec::Linear, StatisticKind::Hsic, &PermutationTest::new(0, 0.1, 1)).is_err());
        assert!(permutation_test(&x, &y, &KernelSpec::Linear, &KernelSpec::Linear, StatisticKind::Hsic, &PermutationTest::new(5, 1.0, 1)).is_err());
    }

    #[test]
    fn scatter_on_diagonal_for_plain() {
        let g = pair(&[0.2, 1.0, 2.5, -0.4, 0.9], &[1.0, 0.1, 2.2, -1.0, 0.3]);
        let cfg = PermutationTest::new(20, 0.05, 1);
        let rec = shrinkage_scatter(&g, StatisticKind::Hsic, &cfg).unwrap();
        assert_eq!(rec.observed.0, rec.observed.1);
        assert!(rec.permuted.iter().all(|(a, b)| a == b));
        let rec = shrinkage_scatter(&g, StatisticKind::HsicLw, &cfg).unwrap();
        assert!(rec.permuted.iter().all(|(a, b)| b <= a && *b >= 0.0));
    }
}

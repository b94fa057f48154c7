//! Flexible covariance shrinkage (FCOSE) with leave-one-out selection of λ.
//!
//! Writing `z_i = φ̃(x_i) ⊗ ψ̃(y_i)` and `M = K̃∘L̃` (so `⟨z_i, z_j⟩ = M_ij`),
//! the estimator is `Σ_i (β_i/n) z_i` with `β = (M + λI)⁻¹ M 1`.
//!
//! The LOOCV criterion is
//!
//! ```text
//! E(λ) = Σ_i ‖z_i − Σ_{j≠i} (β⁽⁻ⁱ⁾_j / n) z_j‖²,   β⁽⁻ⁱ⁾ = (M₋ᵢ + λI)⁻¹ M₋ᵢ 1,
//! ```
//!
//! where `M₋ᵢ` drops row and column `i`. [`FcoseSolver`] evaluates it from a
//! single eigendecomposition `M = V diag(e) Vᵀ` in `O(n²)` per λ: the
//! held-out solution, padded with a zero at `i`, is
//! `b̃ = a + (c_i − 1) e_i − c_i G M e_i` where `G = (M + λI)⁻¹`,
//! `a = G M 1` and `c_i = (G1)_i / G_ii`. Every quadratic form in `b̃` is
//! then a diagonal entry or vector of a spectral function of `M`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{b2, d2, ShrinkageKind, ShrinkageResult};
use crate::error::{Error, Result};
use crate::kernels::GramPair;

/// Number of grid points used by [`LambdaGrid::default`].
pub const DEFAULT_GRID_POINTS: usize = 30;

/// Candidate values for the FCOSE regularization.
#[derive(Debug, Clone, PartialEq)]
pub enum LambdaGrid {
    /// `points` log-spaced values in `[1e-4, 1e2] · tr(M)/n`, resolved per gram pair.
    Auto(usize),
    Fixed(Vec<f64>),
}

impl Default for LambdaGrid {
    fn default() -> Self {
        LambdaGrid::Auto(DEFAULT_GRID_POINTS)
    }
}

impl LambdaGrid {
    /// Concrete λ values for this gram pair.
    pub fn resolve(&self, g: &GramPair) -> Result<Vec<f64>> {
        match self {
            LambdaGrid::Auto(points) => default_lambda_grid(g, *points),
            LambdaGrid::Fixed(values) => {
                validate_grid(values)?;
                Ok(values.clone())
            }
        }
    }
}

/// `points` log-spaced values in `[1e-4 s, 1e2 s]` with `s = tr(K̃∘L̃)/n`
/// (or `s = 1` when that trace vanishes).
pub fn default_lambda_grid(g: &GramPair, points: usize) -> Result<Vec<f64>> {
    if points == 0 {
        return Err(Error::InvalidInput("lambda grid must have at least one point".into()));
    }
    let scale = g.diag_inner() / g.n() as f64;
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
    let (lo, hi) = ((1e-4f64).ln(), (1e2f64).ln());
    Ok((0..points)
        .map(|i| {
            let t = if points == 1 { 0.5 } else { i as f64 / (points - 1) as f64 };
            scale * (lo + t * (hi - lo)).exp()
        })
        .collect())
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("lambda grid is empty".into()));
    }
    if let Some(bad) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidInput(format!("lambda values must be positive and finite, got {bad}")));
    }
    Ok(())
}

/// Eigendecomposition of `M = K̃∘L̃`, shared by all λ.
#[derive(Debug, Clone)]
pub struct FcoseSolver {
    m: DMatrix<f64>,
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
    /// `Vᵀ 1`
    ones_proj: DVector<f64>,
}

impl FcoseSolver {
    pub fn new(g: &GramPair) -> Self {
        Self::from_hadamard(g.hadamard())
    }

    pub fn from_hadamard(m: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(m.clone());
        let ones = DVector::from_element(m.nrows(), 1.0);
        let ones_proj = eig.eigenvectors.tr_mul(&ones);
        FcoseSolver { m, eigenvalues: eig.eigenvalues, eigenvectors: eig.eigenvectors, ones_proj }
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn hadamard(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// `V diag(f(e_k) · (Vᵀ1)_k)`, i.e. `f(M) 1`.
    fn apply_to_ones(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let coeffs = DVector::from_iterator(
            self.n(),
            self.eigenvalues.iter().zip(self.ones_proj.iter()).map(|(&e, &q)| f(e) * q),
        );
        &self.eigenvectors * coeffs
    }

    /// Diagonal of `f(M)`.
    fn diag_of(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        let fe: Vec<f64> = self.eigenvalues.iter().map(|&e| f(e)).collect();
        DVector::from_iterator(
            self.n(),
            self.eigenvectors.row_iter().map(|row| row.iter().zip(&fe).map(|(v, f)| v * v * f).sum()),
        )
    }

    /// `β = (M + λI)⁻¹ M 1`.
    pub fn beta(&self, lambda: f64) -> DVector<f64> {
        self.apply_to_ones(|e| e / (e + lambda))
    }

    /// LOOCV criterion `E(λ)` in `O(n²)`.
    pub fn loocv(&self, lambda: f64) -> f64 {
        let n = self.n();
        let nf = n as f64;
        let r = self.apply_to_ones(|e| 1.0 / (e + lambda));
        let ma = self.apply_to_ones(|e| e * e / (e + lambda));
        let mgma = self.apply_to_ones(|e| e * e * e / ((e + lambda) * (e + lambda)));
        let g_diag = self.diag_of(|e| 1.0 / (e + lambda));
        let mgm_diag = self.diag_of(|e| e * e / (e + lambda));
        let mgmgm_diag = self.diag_of(|e| e * e * e / ((e + lambda) * (e + lambda)));
        let a_m_a: f64 = self
            .eigenvalues
            .iter()
            .zip(self.ones_proj.iter())
            .map(|(&e, &q)| e * e * e * q * q / ((e + lambda) * (e + lambda)))
            .sum();

        (0..n)
            .map(|i| {
                let m_ii = self.m[(i, i)];
                let c = r[i] / g_diag[i];
                let mb_i = ma[i] + (c - 1.0) * m_ii - c * mgm_diag[i];
                let bmb = a_m_a + (c - 1.0) * (c - 1.0) * m_ii + c * c * mgmgm_diag[i] + 2.0 * (c - 1.0) * ma[i]
                    - 2.0 * c * mgma[i]
                    - 2.0 * c * (c - 1.0) * mgm_diag[i];
                m_ii - 2.0 / nf * mb_i + bmb / (nf * nf)
            })
            .sum()
    }

    /// λ minimizing LOOCV over `grid`; ties go to the larger λ.
    pub fn select(&self, grid: &[f64]) -> Result<(f64, f64)> {
        if self.n() < 2 {
            return Err(Error::InvalidInput("FCOSE needs at least two points".into()));
        }
        validate_grid(grid)?;
        let mut sorted = grid.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut best: Option<(f64, f64)> = None;
        for &lambda in &sorted {
            let e = self.loocv(lambda);
            if !e.is_finite() {
                return Err(Error::Numerical(format!("LOOCV is not finite at lambda = {lambda}")));
            }
            match best {
                Some((_, be)) if e > be => {}
                _ => best = Some((lambda, e)),
            }
        }
        Ok(best.expect("grid is non-empty"))
    }
}

/// `β` for a fixed λ.
pub fn fcose_beta(g: &GramPair, lambda: f64) -> Result<Vec<f64>> {
    validate_grid(&[lambda])?;
    Ok(FcoseSolver::new(g).beta(lambda).iter().copied().collect())
}

/// Fits FCOSE, choosing λ from `grid` by LOOCV.
pub fn fcose_fit(g: &GramPair, grid: &[f64]) -> Result<ShrinkageResult> {
    fit_with_solver(g, &FcoseSolver::new(g), grid)
}

pub(crate) fn fit_with_solver(g: &GramPair, solver: &FcoseSolver, grid: &[f64]) -> Result<ShrinkageResult> {
    let (lambda, _) = solver.select(grid)?;
    Ok(ShrinkageResult {
        kind: ShrinkageKind::Fcose,
        rho: None,
        beta: Some(solver.beta(lambda).iter().copied().collect()),
        lambda: Some(lambda),
        clamped: false,
        d2: d2(g),
        b2: b2(g),
    })
}

/// `E(λ)` by `n` explicit refits on the reduced systems; `O(n⁴)`.
pub fn fcose_loocv_bruteforce(g: &GramPair, lambda: f64) -> Result<f64> {
    validate_grid(&[lambda])?;
    let n = g.n();
    if n < 2 {
        return Err(Error::InvalidInput("LOOCV needs at least two points".into()));
    }
    let m = g.hadamard();
    let nf = n as f64;
    let mut total = 0.0;
    for i in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let sub = m.select_rows(&keep).select_columns(&keep);
        let rhs = &sub * DVector::from_element(n - 1, 1.0);
        let system = &sub + DMatrix::identity(n - 1, n - 1) * lambda;
        let beta = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("singular leave-one-out system".into()))?;
        let cross: f64 = keep.iter().zip(beta.iter()).map(|(&j, b)| b * m[(j, i)]).sum();
        let quad = beta.dot(&(&sub * &beta));
        total += m[(i, i)] - 2.0 / nf * cross + quad / (nf * nf);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, SampleSet};

    fn three_point() -> GramPair {
        let x = SampleSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
        GramPair::from_samples(&x, &x, &KernelSpec::Linear, &KernelSpec::Linear).unwrap()
    }

    #[test]
    fn beta_three_point() {
        let beta = fcose_beta(&three_point(), 1.0).unwrap();
        let expected = [2.0 / 3.0, 0.0, 2.0 / 3.0];
        for (b, e) in beta.iter().zip(expected) {
            assert!((b - e).abs() < 1e-12, "{beta:?}");
        }
    }

    #[test]
    fn beta_limits() {
        let x = SampleSet::new(vec![vec![0.1, 0.4], vec![1.3, -0.2], vec![-0.7, 0.9], vec![0.5, 0.5]]).unwrap();
        let y = SampleSet::from_scalars(&[0.3, -1.0, 0.8, 2.0]).unwrap();
        let g = GramPair::from_samples(
            &x,
            &y,
            &KernelSpec::gaussian(0.8).unwrap(),
            &KernelSpec::gaussian(1.1).unwrap(),
        )
        .unwrap();
        let huge = fcose_beta(&g, 1e12).unwrap();
        assert!(huge.iter().all(|b| b.abs() < 1e-10));
        let tiny = fcose_beta(&g, 1e-12).unwrap();
        assert!(tiny.iter().all(|b| (b - 1.0).abs() < 1e-6), "{tiny:?}");
    }

    #[test]
    fn loocv_large_lambda_limit_is_trace() {
        let g = three_point();
        let trace = g.hadamard().trace();
        let e = fcose_loocv_bruteforce(&g, 1e12).unwrap();
        assert!((e - trace).abs() < 1e-9);
        let fast = FcoseSolver::new(&g).loocv(1e12);
        assert!((fast - trace).abs() < 1e-9);
    }

    #[test]
    fn loocv_two_point_symmetry() {
        let x = SampleSet::from_scalars(&[-1.0, 1.0]).unwrap();
        let g = GramPair::from_samples(&x, &x, &KernelSpec::Linear, &KernelSpec::Linear).unwrap();
        // Both held-out errors coincide, so the total is twice the first one.
        let m = g.hadamard();
        let beta = m[(1, 1)] / (m[(1, 1)] + 0.5);
        let single = m[(0, 0)] - beta * m[(1, 0)] + beta * beta * m[(1, 1)] / 4.0;
        let e = fcose_loocv_bruteforce(&g, 0.5).unwrap();
        assert!((e - 2.0 * single).abs() < 1e-14);
    }

    #[test]
    fn grid_validation() {
        let g = three_point();
        assert!(fcose_fit(&g, &[]).is_err());
        assert!(fcose_fit(&g, &[1.0, 0.0]).is_err());
        assert!(fcose_fit(&g, &[-1.0]).is_err());
        assert!(fcose_beta(&g, 0.0).is_err());
        let grid = default_lambda_grid(&g, 30).unwrap();
        assert_eq!(grid.len(), 30);
        let scale = g.diag_inner() / 3.0;
        assert!((grid[0] / scale - 1e-4).abs() < 1e-15);
        assert!((grid[29] / scale - 1e2).abs() < 1e-10);
    }

    #[test]
    fn ties_prefer_larger_lambda() {
        // A zero hadamard product makes E(λ) constant in λ.
        let solver = FcoseSolver::from_hadamard(DMatrix::zeros(3, 3));
        let (lambda, _) = solver.select(&[0.1, 10.0, 1.0]).unwrap();
        assert_eq!(lambda, 10.0);
    }
}

//! Empirical cross-covariance operators as weighted sums of rank-one tensors.
//!
//! An operator is `S = Σ_i w_i (φ̃(x_i) ⊗ ψ̃(y_i))`, where the features are
//! centered at the kernel mean of the operator's own sample. Plain `S_XY`
//! has `w_i = 1/n`; linear shrinkage rescales all weights, FCOSE reweights
//! them individually. Hilbert-Schmidt inner products reduce to gram
//! algebra: `⟨φ̃_i ⊗ ψ̃_i, φ̃_j ⊗ ψ̃_j⟩ = k̃(x_i, x_j) · ℓ̃(y_i, y_j)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::{self, GramPair, KernelSpec, SampleSet};
use crate::linalg::{self, psd_roots};

/// Singular values below this fraction of the largest one are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct EmpiricalOperator {
    x: Arc<SampleSet>,
    y: Arc<SampleSet>,
    x_kernel: KernelSpec,
    y_kernel: KernelSpec,
    weights: Vec<f64>,
}

impl EmpiricalOperator {
    pub fn new(
        x: Arc<SampleSet>,
        y: Arc<SampleSet>,
        x_kernel: KernelSpec,
        y_kernel: KernelSpec,
        weights: Vec<f64>,
    ) -> Result<Self> {
        x_kernel.validate()?;
        y_kernel.validate()?;
        if x.len() != y.len() {
            return Err(Error::InvalidSample(format!(
                "paired samples differ in size: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        if weights.len() != x.len() {
            return Err(Error::DimensionMismatch { expected: x.len(), actual: weights.len() });
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("operator weights must be finite".into()));
        }
        Ok(EmpiricalOperator { x, y, x_kernel, y_kernel, weights })
    }

    /// The sample cross-covariance operator `S_XY` (weights `1/n`).
    pub fn plain(x: Arc<SampleSet>, y: Arc<SampleSet>, x_kernel: KernelSpec, y_kernel: KernelSpec) -> Result<Self> {
        let n = x.len();
        Self::new(x, y, x_kernel, y_kernel, vec![1.0 / n as f64; n])
    }

    /// Same samples and kernels, different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.x.clone(), self.y.clone(), self.x_kernel, self.y_kernel, weights)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        self.with_weights(self.weights.iter().map(|w| w * c).collect())
    }

    /// Same operator with the roles of x and y exchanged (the adjoint).
    pub fn transposed(&self) -> Self {
        EmpiricalOperator {
            x: self.y.clone(),
            y: self.x.clone(),
            x_kernel: self.y_kernel,
            y_kernel: self.x_kernel,
            weights: self.weights.clone(),
        }
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn x_sample(&self) -> &Arc<SampleSet> {
        &self.x
    }

    pub fn y_sample(&self) -> &Arc<SampleSet> {
        &self.y
    }

    pub fn x_kernel(&self) -> KernelSpec {
        self.x_kernel
    }

    pub fn y_kernel(&self) -> KernelSpec {
        self.y_kernel
    }

    pub fn gram_pair(&self) -> Result<GramPair> {
        GramPair::from_samples(&self.x, &self.y, &self.x_kernel, &self.y_kernel)
    }

    fn check_compatible(&self, other: &EmpiricalOperator) -> Result<()> {
        if self.x_kernel != other.x_kernel || self.y_kernel != other.y_kernel {
            return Err(Error::KernelMismatch);
        }
        if self.x.dim() != other.x.dim() {
            return Err(Error::DimensionMismatch { expected: self.x.dim(), actual: other.x.dim() });
        }
        if self.y.dim() != other.y.dim() {
            return Err(Error::DimensionMismatch { expected: self.y.dim(), actual: other.y.dim() });
        }
        Ok(())
    }
}

/// Centered cross grams between the samples of two operators, on both sides.
///
/// Computing these once lets callers evaluate inner products for many weight
/// vectors on the same pair of samples.
#[derive(Debug, Clone)]
pub struct CrossGrams {
    kx: DMatrix<f64>,
    ly: DMatrix<f64>,
}

impl CrossGrams {
    pub fn between(a: &EmpiricalOperator, b: &EmpiricalOperator) -> Result<Self> {
        a.check_compatible(b)?;
        if Arc::ptr_eq(&a.x, &b.x) && Arc::ptr_eq(&a.y, &b.y) {
            return Ok(Self::from_gram_pair(&a.gram_pair()?));
        }
        Ok(CrossGrams {
            kx: kernels::cross_centered_gram(&a.x_kernel, &a.x, &b.x)?,
            ly: kernels::cross_centered_gram(&a.y_kernel, &a.y, &b.y)?,
        })
    }

    pub fn from_gram_pair(g: &GramPair) -> Self {
        CrossGrams { kx: g.k_centered().clone(), ly: g.l_centered().clone() }
    }

    /// `Σ_ij wa_i wb_j K̃ᴬᴮ_ij L̃ᴬᴮ_ij`.
    pub fn inner(&self, wa: &[f64], wb: &[f64]) -> f64 {
        debug_assert_eq!(wa.len(), self.kx.nrows());
        debug_assert_eq!(wb.len(), self.kx.ncols());
        let mut total = 0.0;
        for (j, &wj) in wb.iter().enumerate() {
            if wj == 0.0 {
                continue;
            }
            let kc = self.kx.column(j);
            let lc = self.ly.column(j);
            let col: f64 = wa.iter().zip(kc.iter().zip(lc.iter())).map(|(w, (k, l))| w * k * l).sum();
            total += wj * col;
        }
        total
    }
}

pub fn hs_inner(a: &EmpiricalOperator, b: &EmpiricalOperator) -> Result<f64> {
    Ok(CrossGrams::between(a, b)?.inner(&a.weights, &b.weights))
}

pub fn hs_norm_sq(a: &EmpiricalOperator) -> Result<f64> {
    let g = a.gram_pair()?;
    Ok(CrossGrams::from_gram_pair(&g).inner(&a.weights, &a.weights).max(0.0))
}

/// `‖A − B‖²_HS`, with roundoff-level negatives clipped to zero.
pub fn hs_distance_sq(a: &EmpiricalOperator, b: &EmpiricalOperator) -> Result<f64> {
    let ab = hs_inner(a, b)?;
    combine_distance(hs_norm_sq(a)?, ab, hs_norm_sq(b)?)
}

/// `‖A‖² − 2⟨A, B⟩ + ‖B‖²` from precomputed pieces.
pub fn combine_distance(norm_a: f64, inner_ab: f64, norm_b: f64) -> Result<f64> {
    let d = norm_a - 2.0 * inner_ab + norm_b;
    let tol = 1e-10 * (1.0f64).max(norm_a + norm_b);
    if d >= 0.0 {
        Ok(d)
    } else if d >= -tol {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("squared distance is negative: {d:e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// A function `f = Σ_j c_j φ̃(x_j)` in the span of centered features of a sample.
#[derive(Debug, Clone)]
pub struct FeatureExpansion {
    pub sample: Arc<SampleSet>,
    pub kernel: KernelSpec,
    pub coeffs: DVector<f64>,
}

impl FeatureExpansion {
    pub fn new(sample: Arc<SampleSet>, kernel: KernelSpec, coeffs: DVector<f64>) -> Result<Self> {
        if coeffs.len() != sample.len() {
            return Err(Error::DimensionMismatch { expected: sample.len(), actual: coeffs.len() });
        }
        kernel.validate()?;
        Ok(FeatureExpansion { sample, kernel, coeffs })
    }

    pub fn negated(&self) -> Self {
        FeatureExpansion { sample: self.sample.clone(), kernel: self.kernel, coeffs: -&self.coeffs }
    }

    /// Point evaluations `f(t) = Σ_j c_j (φ(x_j) − μ̂)(t)`.
    pub fn eval(&self, query: &SampleSet) -> Result<Vec<f64>> {
        if query.dim() != self.sample.dim() {
            return Err(Error::DimensionMismatch { expected: self.sample.dim(), actual: query.dim() });
        }
        let n = self.sample.len();
        let k = kernels::gram(&self.kernel, &self.sample)?;
        let row_means: Vec<f64> = (0..n).map(|j| k.row(j).sum() / n as f64).collect();
        let grand = row_means.iter().sum::<f64>() / n as f64;
        let c_sum = self.coeffs.sum();
        let c_rm: f64 = self.coeffs.iter().zip(&row_means).map(|(c, r)| c * r).sum();
        Ok(query
            .iter()
            .map(|t| {
                let mut ck = 0.0;
                let mut mean_t = 0.0;
                for (j, xj) in self.sample.iter().enumerate() {
                    let v = self.kernel.eval(xj, t);
                    ck += self.coeffs[j] * v;
                    mean_t += v;
                }
                mean_t /= n as f64;
                ck - c_sum * (mean_t - grand) - c_rm
            })
            .collect())
    }
}

/// `⟨f, g⟩` in the RKHS of their (shared) kernel.
pub fn rkhs_inner(f: &FeatureExpansion, g: &FeatureExpansion) -> Result<f64> {
    if f.kernel != g.kernel {
        return Err(Error::KernelMismatch);
    }
    let c = kernels::cross_centered_gram(&f.kernel, &f.sample, &g.sample)?;
    Ok(f.coeffs.dot(&(&c * &g.coeffs)))
}

pub fn rkhs_norm_sq(f: &FeatureExpansion) -> Result<f64> {
    let c = kernels::center(&kernels::gram(&f.kernel, &f.sample)?);
    Ok(f.coeffs.dot(&(&c * &f.coeffs)))
}

/// `‖f − g‖²` via `aᵀK̃_A a − 2aᵀK̃ᴬᴮb + bᵀK̃_B b`.
pub fn rkhs_diff_norm_sq(f: &FeatureExpansion, g: &FeatureExpansion) -> Result<f64> {
    let fg = rkhs_inner(f, g)?;
    let ff = rkhs_norm_sq(f)?;
    let gg = rkhs_norm_sq(g)?;
    let d = ff - 2.0 * fg + gg;
    let tol = 1e-10 * (1.0f64).max(ff + gg);
    if d < -tol {
        return Err(Error::Numerical(format!("squared RKHS distance is negative: {d:e}")));
    }
    Ok(d.max(0.0))
}

/// Returns `f` or `−f`, whichever has a nonnegative inner product with `reference`.
pub fn align_sign(f: &FeatureExpansion, reference: &FeatureExpansion) -> Result<FeatureExpansion> {
    if rkhs_inner(f, reference)? < 0.0 {
        Ok(f.negated())
    } else {
        Ok(f.clone())
    }
}

/// Evaluates `Σ_j c_j φ̃(·)` on the chosen side of an operator.
pub fn eval_function(a: &EmpiricalOperator, coeffs: &[f64], side: Side, query: &SampleSet) -> Result<Vec<f64>> {
    let (sample, kernel) = match side {
        Side::Left => (a.x.clone(), a.x_kernel),
        Side::Right => (a.y.clone(), a.y_kernel),
    };
    FeatureExpansion::new(sample, kernel, DVector::from_column_slice(coeffs))?.eval(query)
}

/// Singular values (nonincreasing) and singular-function coefficients.
///
/// The i-th left singular function is `Σ_j left_coeffs[i][j] φ̃(x_j)`, with
/// unit RKHS norm; right functions likewise over the y-sample.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub singular_values: Vec<f64>,
    pub left_coeffs: Vec<DVector<f64>>,
    pub right_coeffs: Vec<DVector<f64>>,
}

impl SpectralDecomposition {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn function(&self, op: &EmpiricalOperator, i: usize, side: Side) -> FeatureExpansion {
        match side {
            Side::Left => FeatureExpansion {
                sample: op.x.clone(),
                kernel: op.x_kernel,
                coeffs: self.left_coeffs[i].clone(),
            },
            Side::Right => FeatureExpansion {
                sample: op.y.clone(),
                kernel: op.y_kernel,
                coeffs: self.right_coeffs[i].clone(),
            },
        }
    }

    /// Singular values padded with zeros to length `k`.
    pub fn padded_values(&self, k: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.singular_values.iter().copied().take(k).collect();
        v.resize(k, 0.0);
        v
    }
}

/// Leading `top_k` singular triples of the operator.
///
/// With `M_x = K̃^{1/2}` and `M_y = L̃^{1/2}`, the operator is unitarily
/// equivalent to `C = M_x diag(w) M_y`. Left coefficients are
/// `K̃^{+1/2} p_i` for the left singular vectors `p_i` of `C`, right ones
/// `L̃^{+1/2} q_i`. Only components above the rank tolerance are returned.
/// For `x = y` with equal kernels this yields the covariance-operator
/// eigenvalues.
pub fn singular_spectrum(a: &EmpiricalOperator, top_k: usize) -> Result<SpectralDecomposition> {
    let n = a.n();
    if top_k > n {
        return Err(Error::InvalidInput(format!("top_k = {top_k} exceeds the sample size {n}")));
    }
    let g = a.gram_pair()?;
    let rx = psd_roots(g.k_centered());
    let ry = if Arc::ptr_eq(&a.x, &a.y) && a.x_kernel == a.y_kernel {
        None
    } else {
        Some(psd_roots(g.l_centered()))
    };
    let ry = ry.as_ref().unwrap_or(&rx);

    let mut c = rx.sqrt.clone();
    for (j, &w) in a.weights.iter().enumerate() {
        c.column_mut(j).scale_mut(w);
    }
    let c = c * &ry.sqrt;

    let svd = linalg::svd(&c)?;
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let mut out = SpectralDecomposition { singular_values: vec![], left_coeffs: vec![], right_coeffs: vec![] };
    if !(smax > f64::MIN_POSITIVE) {
        return Ok(out);
    }
    for (i, &s) in svd.s.iter().enumerate().take(top_k) {
        if s <= RANK_TOLERANCE * smax {
            break;
        }
        out.singular_values.push(s);
        out.left_coeffs.push(&rx.pinv_sqrt * svd.u.column(i));
        out.right_coeffs.push(&ry.pinv_sqrt * svd.v.column(i));
    }
    Ok(out)
}

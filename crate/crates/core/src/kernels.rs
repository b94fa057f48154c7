//! Reproducing kernels, gram matrices and centering.
//!
//! Kernel parameterizations used throughout the crate:
//!
//! | kind         | k(x, y)                         |
//! |--------------|---------------------------------|
//! | `Linear`     | xᵀy                             |
//! | `Polynomial` | (xᵀy + offset)^degree           |
//! | `Gaussian`   | exp(−‖x − y‖² / (2σ²))          |
//! | `Laplace`    | exp(−‖x − y‖₁ / σ)              |
//!
//! Centered quantities always refer to features centered at the empirical
//! kernel mean of their own sample: K̃ = HKH with H = I − (1/n)11ᵀ.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A reproducing kernel together with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Linear,
    Polynomial { degree: u32, offset: f64 },
    Gaussian { bandwidth: f64 },
    Laplace { bandwidth: f64 },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        let k = KernelSpec::Gaussian { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn laplace(bandwidth: f64) -> Result<Self> {
        let k = KernelSpec::Laplace { bandwidth };
        k.validate()?;
        Ok(k)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Result<Self> {
        let k = KernelSpec::Polynomial { degree, offset };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Linear => Ok(()),
            KernelSpec::Polynomial { degree, offset } => {
                if degree < 1 {
                    return Err(Error::InvalidKernel("polynomial degree must be >= 1".into()));
                }
                if !offset.is_finite() {
                    return Err(Error::InvalidKernel("polynomial offset must be finite".into()));
                }
                Ok(())
            }
            KernelSpec::Gaussian { bandwidth } | KernelSpec::Laplace { bandwidth } => {
                if bandwidth > 0.0 && bandwidth.is_finite() {
                    Ok(())
                } else {
                    Err(Error::InvalidKernel(format!(
                        "bandwidth must be positive and finite, got {bandwidth}"
                    )))
                }
            }
        }
    }

    /// Evaluates the kernel without checking dimensions.
    #[inline]
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { degree, offset } => (dot(x, y) + offset).powi(degree as i32),
            KernelSpec::Gaussian { bandwidth } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * bandwidth * bandwidth)).exp()
            }
            KernelSpec::Laplace { bandwidth } => {
                let d1: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-d1 / bandwidth).exp()
            }
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// A set of `n >= 1` finite points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    data: Vec<f64>,
    dim: usize,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidSample("sample must contain at least one point".into()))?;
        let mut data = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, actual: p.len() });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(data, dim)
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidSample("points must have dimension >= 1".into()));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::InvalidSample(format!(
                "flat buffer of length {} does not hold whole points of dimension {dim}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSample("all coordinates must be finite".into()));
        }
        Ok(SampleSet { data, dim })
    }

    /// One-dimensional sample from scalar values.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_flat(values.to_vec(), 1)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// New sample whose `i`-th point is `self.point(perm[i])`.
    pub fn permuted(&self, perm: &[usize]) -> SampleSet {
        let mut data = Vec::with_capacity(self.data.len());
        for &p in perm {
            data.extend_from_slice(self.point(p));
        }
        SampleSet { data, dim: self.dim }
    }

    /// New sample with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> SampleSet {
        SampleSet { data: self.data.iter().map(|v| v * c).collect(), dim: self.dim }
    }
}

/// Checked kernel evaluation.
pub fn eval_kernel(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    spec.validate()?;
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), actual: y.len() });
    }
    Ok(spec.eval(x, y))
}

/// Gram matrix `K[i][j] = k(x_i, x_j)`.
pub fn gram(spec: &KernelSpec, s: &SampleSet) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let n = s.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        let xi = s.point(i);
        for j in 0..=i {
            let v = spec.eval(xi, s.point(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// Rectangular kernel matrix `K[i][j] = k(a_i, b_j)`.
pub fn cross_gram(spec: &KernelSpec, a: &SampleSet, b: &SampleSet) -> Result<DMatrix<f64>> {
    spec.validate()?;
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| spec.eval(a.point(i), b.point(j))))
}

/// Double centering `HKH`, computed with the four-term formula and symmetrized.
pub fn center(k: &DMatrix<f64>) -> DMatrix<f64> {
    let c = center_rectangular(k);
    (&c + c.transpose()) * 0.5
}

/// `K_ij − rowmean_i − colmean_j + grandmean` for a rectangular matrix.
pub(crate) fn center_rectangular(k: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = k.shape();
    let row_means: Vec<f64> = (0..r).map(|i| k.row(i).sum() / c as f64).collect();
    let col_means: Vec<f64> = (0..c).map(|j| k.column(j).sum() / r as f64).collect();
    let grand = row_means.iter().sum::<f64>() / r as f64;
    DMatrix::from_fn(r, c, |i, j| k[(i, j)] - row_means[i] - col_means[j] + grand)
}

/// Inner products of centered features across two samples:
/// entry `(i, j)` is `⟨φ(a_i) − μ̂_A, φ(b_j) − μ̂_B⟩`.
pub fn cross_centered_gram(spec: &KernelSpec, a: &SampleSet, b: &SampleSet) -> Result<DMatrix<f64>> {
    Ok(center_rectangular(&cross_gram(spec, a, b)?))
}

/// Median of the pairwise Euclidean distances (lower median on even counts).
pub fn median_heuristic(s: &SampleSet) -> Result<f64> {
    let n = s.len();
    if n < 2 {
        return Err(Error::DegenerateSample("median heuristic needs at least two points".into()));
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: f64 = s.point(i).iter().zip(s.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            dists.push(d2.sqrt());
        }
    }
    let mid = (dists.len() - 1) / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    let median = *median;
    if median > 0.0 {
        Ok(median)
    } else if let Some(&max) = dists.iter().max_by(|a, b| a.total_cmp(b)) {
        // More than half of the pairs coincide; fall back to the smallest positive distance.
        if max > 0.0 {
            Ok(dists.iter().copied().filter(|&d| d > 0.0).fold(f64::INFINITY, f64::min))
        } else {
            Err(Error::DegenerateSample("all pairwise distances are zero".into()))
        }
    } else {
        Err(Error::DegenerateSample("all pairwise distances are zero".into()))
    }
}

/// Centered gram matrices `K̃`, `L̃` of a paired sample.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPair {
    k: DMatrix<f64>,
    l: DMatrix<f64>,
    specs: Option<(KernelSpec, KernelSpec)>,
}

impl GramPair {
    pub fn from_samples(x: &SampleSet, y: &SampleSet, kx: &KernelSpec, ky: &KernelSpec) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::InvalidSample(format!(
                "paired samples differ in size: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        Ok(GramPair {
            k: center(&gram(kx, x)?),
            l: center(&gram(ky, y)?),
            specs: Some((*kx, *ky)),
        })
    }

    /// Centers two uncentered gram matrices.
    pub fn from_grams(k: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<Self> {
        check_square_pair(k, l)?;
        Ok(GramPair { k: center(k), l: center(l), specs: None })
    }

    /// Wraps already centered grams after checking symmetry and double centering.
    pub fn from_centered(k: DMatrix<f64>, l: DMatrix<f64>) -> Result<Self> {
        check_square_pair(&k, &l)?;
        for (name, m) in [("K", &k), ("L", &l)] {
            let n = m.nrows() as f64;
            let scale = m.amax().max(f64::MIN_POSITIVE);
            let tol = 1e-10 * n * scale;
            if (m - m.transpose()).amax() > tol {
                return Err(Error::InvalidInput(format!("centered {name} is not symmetric")));
            }
            if m.row_iter().any(|r| r.sum().abs() > tol) {
                return Err(Error::InvalidInput(format!("{name} is not doubly centered")));
            }
        }
        Ok(GramPair { k, l, specs: None })
    }

    pub fn n(&self) -> usize {
        self.k.nrows()
    }

    pub fn k_centered(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn l_centered(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn specs(&self) -> Option<(KernelSpec, KernelSpec)> {
        self.specs
    }

    /// `Σ_ij K̃_ij L̃_ij`.
    pub fn frobenius_inner(&self) -> f64 {
        self.k.dot(&self.l)
    }

    /// `Σ_i K̃_ii L̃_ii`.
    pub fn diag_inner(&self) -> f64 {
        self.k.diagonal().dot(&self.l.diagonal())
    }

    /// Hadamard product `K̃ ∘ L̃`.
    pub fn hadamard(&self) -> DMatrix<f64> {
        self.k.component_mul(&self.l)
    }

    /// Pair with `L̃` conjugated by the permutation: `L̃'_ij = L̃_{π(i) π(j)}`.
    ///
    /// Equivalent to recentering the gram of the permuted y-sample, since H
    /// commutes with permutation conjugation.
    pub fn permute_l(&self, perm: &[usize]) -> GramPair {
        let n = self.n();
        GramPair {
            k: self.k.clone(),
            l: DMatrix::from_fn(n, n, |i, j| self.l[(perm[i], perm[j])]),
            specs: self.specs,
        }
    }
}

fn check_square_pair(k: &DMatrix<f64>, l: &DMatrix<f64>) -> Result<()> {
    if !k.is_square() || !l.is_square() {
        return Err(Error::InvalidInput("gram matrices must be square".into()));
    }
    if k.nrows() != l.nrows() {
        return Err(Error::DimensionMismatch { expected: k.nrows(), actual: l.nrows() });
    }
    if k.nrows() == 0 {
        return Err(Error::InvalidInput("gram matrices must be non-empty".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(eval_kernel(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        let g = KernelSpec::gaussian(1.0).unwrap();
        assert_eq!(eval_kernel(&g, &[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        let l = KernelSpec::laplace(2.0).unwrap();
        let v = eval_kernel(&l, &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(close(v, (-1.0f64).exp(), 1e-15));
        assert!(close(v, 0.367879, 1e-6));
    }

    #[test]
    fn kernel_errors() {
        assert!(matches!(
            eval_kernel(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KernelSpec::gaussian(0.0).is_err());
        assert!(KernelSpec::laplace(-1.0).is_err());
        assert!(KernelSpec::polynomial(0, 1.0).is_err());
    }

    #[test]
    fn gram_examples() {
        let s = SampleSet::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        let k = gram(&KernelSpec::Linear, &s).unwrap();
        assert_eq!(k, dmatrix![1.0, 2.0, 3.0; 2.0, 4.0, 6.0; 3.0, 6.0, 9.0]);

        let one = SampleSet::from_scalars(&[0.7]).unwrap();
        let k = gram(&KernelSpec::polynomial(2, 1.0).unwrap(), &one).unwrap();
        assert_eq!(k, dmatrix![(0.49f64 + 1.0).powi(2)]);

        let s = SampleSet::from_scalars(&[0.0, 1.0]).unwrap();
        let k = gram(&KernelSpec::gaussian(1.0).unwrap(), &s).unwrap();
        assert!(close(k[(0, 1)], (-0.5f64).exp(), 1e-15));
        assert!(close(k[(0, 1)], 0.606531, 1e-6));
    }

    #[test]
    fn center_examples() {
        let c = center(&dmatrix![0.0, 0.0; 0.0, 1.0]);
        assert_eq!(c, dmatrix![0.25, -0.25; -0.25, 0.25]);

        let centered = dmatrix![1.0, -1.0; -1.0, 1.0];
        assert_eq!(center(&centered), centered);

        let constant = DMatrix::from_element(4, 4, 3.5);
        assert!(center(&constant).amax() < 1e-15);
    }

    #[test]
    fn cross_centered_examples() {
        let a = SampleSet::from_scalars(&[-1.0, 1.0]).unwrap();
        let b = SampleSet::from_scalars(&[-2.0, 2.0]).unwrap();
        let c = cross_centered_gram(&KernelSpec::Linear, &a, &b).unwrap();
        assert_eq!(c, dmatrix![2.0, -2.0; -2.0, 2.0]);

        let single = SampleSet::from_scalars(&[5.0]).unwrap();
        let g = KernelSpec::gaussian(0.5).unwrap();
        let c = cross_centered_gram(&g, &a, &single).unwrap();
        assert!(c.amax() < 1e-15);

        let s = SampleSet::new(vec![vec![0.1, 0.2], vec![1.0, -0.3], vec![0.5, 0.5]]).unwrap();
        let self_cross = cross_centered_gram(&g, &s, &s).unwrap();
        let direct = center(&gram(&g, &s).unwrap());
        assert!((self_cross - direct).amax() < 1e-12);

        let other = SampleSet::from_scalars(&[1.0]).unwrap();
        assert!(cross_centered_gram(&g, &s, &other).is_err());
    }

    #[test]
    fn median_heuristic_examples() {
        let s = SampleSet::from_scalars(&[0.0, 1.0, 3.0]).unwrap();
        assert_eq!(median_heuristic(&s).unwrap(), 2.0);

        let s = SampleSet::new(vec![vec![0.0, 0.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(median_heuristic(&s).unwrap(), 5.0);

        let s = SampleSet::from_scalars(&[0.0, 1.0, 3.0, 7.0]).unwrap();
        let m = median_heuristic(&s).unwrap();
        assert!(close(median_heuristic(&s.scaled(2.5)).unwrap(), 2.5 * m, 1e-12));

        let same = SampleSet::from_scalars(&[2.0, 2.0, 2.0]).unwrap();
        assert!(matches!(median_heuristic(&same), Err(Error::DegenerateSample(_))));
        let single = SampleSet::from_scalars(&[2.0]).unwrap();
        assert!(median_heuristic(&single).is_err());
    }

    #[test]
    fn sample_set_validation() {
        assert!(SampleSet::new(vec![]).is_err());
        assert!(SampleSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert!(SampleSet::from_scalars(&[f64::NAN]).is_err());
        let s = SampleSet::from_scalars(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.permuted(&[2, 0, 1]).as_flat(), &[3.0, 1.0, 2.0]);
    }

    #[test]
    fn gram_pair_validation() {
        let k = dmatrix![0.25, -0.25; -0.25, 0.25];
        assert!(GramPair::from_centered(k.clone(), k.clone()).is_ok());
        let bad = dmatrix![1.0, 0.0; 0.0, 1.0];
        assert!(GramPair::from_centered(bad, k.clone()).is_err());
        assert!(GramPair::from_centered(k, DMatrix::zeros(3, 3)).is_err());
    }
}

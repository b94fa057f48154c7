use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative cutoff below which eigenvalues of a PSD matrix are treated as zero.
pub const EIGEN_TRUNCATION: f64 = 1e-12;

/// Symmetric square root and pseudo-inverse square root of a PSD matrix.
pub struct PsdRoots {
    pub sqrt: DMatrix<f64>,
    pub pinv_sqrt: DMatrix<f64>,
}

pub fn psd_roots(m: &DMatrix<f64>) -> PsdRoots {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m.clone());
    let lmax = eig.eigenvalues.max();
    if lmax <= 0.0 {
        return PsdRoots { sqrt: DMatrix::zeros(n, n), pinv_sqrt: DMatrix::zeros(n, n) };
    }
    let cutoff = EIGEN_TRUNCATION * lmax;
    let v = &eig.eigenvectors;
    let mut v_sqrt = v.clone();
    let mut v_pinv = v.clone();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let (a, b) = if lambda > cutoff { (lambda.sqrt(), 1.0 / lambda.sqrt()) } else { (0.0, 0.0) };
        v_sqrt.column_mut(k).scale_mut(a);
        v_pinv.column_mut(k).scale_mut(b);
    }
    let sqrt = &v_sqrt * v.transpose();
    let pinv_sqrt = &v_pinv * v.transpose();
    PsdRoots { sqrt: symmetrize(sqrt), pinv_sqrt: symmetrize(pinv_sqrt) }
}

/// Full singular value decomposition `m = U diag(s) Vᵀ`, values in
/// descending order. Backed by faer: nalgebra's bidiagonal SVD loses accuracy
/// in `U`/`V` on strongly rank-deficient inputs, which are the norm here.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let fm = faer::Mat::<f64>::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)]);
    let dec = fm.thin_svd().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))?;
    let (u, v, s) = (dec.U(), dec.V(), dec.S().column_vector());
    let k = s.nrows();
    Ok(Svd {
        u: DMatrix::from_fn(m.nrows(), k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(m.ncols(), k, |i, j| v[(i, j)]),
    })
}

pub fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7): position `(m − 1)·p` in the sorted values.
pub fn quantile_linear(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn roots_of_diagonal() {
        let m = dmatrix![4.0, 0.0; 0.0, 0.0];
        let r = psd_roots(&m);
        assert!((r.sqrt - dmatrix![2.0, 0.0; 0.0, 0.0]).amax() < 1e-14);
        assert!((r.pinv_sqrt - dmatrix![0.5, 0.0; 0.0, 0.0]).amax() < 1e-14);
    }

    #[test]
    fn root_squares_back() {
        let a = dmatrix![2.0, 1.0, 0.0; 1.0, 3.0, 1.0; 0.0, 1.0, 1.0];
        let m = &a * a.transpose();
        let r = psd_roots(&m);
        assert!((&r.sqrt * &r.sqrt - &m).amax() < 1e-10);
    }

    #[test]
    fn quantile_interpolates() {
        let v = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile_linear(&v, 0.0), 1.0);
        assert_eq!(quantile_linear(&v, 1.0), 4.0);
        assert!((quantile_linear(&v, 0.5) - 2.5).abs() < 1e-15);
        assert!((quantile_linear(&v, 0.95) - 3.85).abs() < 1e-12);
    }
}

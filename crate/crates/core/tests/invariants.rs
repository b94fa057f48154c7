mod common;

use std::sync::Arc;

use kshrink::hsic::{hsic_fcose_fitted, hsic_lw, hsic_n, hsic_scose, statistic, StatisticKind};
use kshrink::kernels::{center, cross_centered_gram, gram, GramPair, KernelSpec, SampleSet};
use kshrink::linalg::psd_roots;
use kshrink::operators::{
    hs_distance_sq, hs_inner, hs_norm_sq, rkhs_norm_sq, singular_spectrum, EmpiricalOperator, Side,
};
use kshrink::shrinkage::{apply_shrinkage, default_lambda_grid, rho_lw, rho_scose};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn kernel(i: usize) -> KernelSpec {
    common::all_kernels()[i % 4]
}

fn operator(seed: u64, n: usize, kx: usize, ky: usize) -> EmpiricalOperator {
    let x = common::random_sample(seed, 0, n, 2);
    let y = common::random_sample(seed, 1, n, 1);
    EmpiricalOperator::plain(Arc::new(x), Arc::new(y), kernel(kx), kernel(ky)).unwrap()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, v| a.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn grams_are_symmetric_psd(seed in 0u64..100_000, n in 1usize..25, k in 0usize..4) {
        let s = common::random_sample(seed, 0, n, 3);
        let m = gram(&kernel(k), &s).unwrap();
        prop_assert_eq!(&m, &m.transpose());
        let scale = max_abs(&m).max(1.0);
        let min_eig = m.symmetric_eigenvalues().min();
        prop_assert!(min_eig >= -1e-10 * scale * n as f64, "min eigenvalue {}", min_eig);
    }

    #[test]
    fn centering_is_idempotent(seed in 0u64..100_000, n in 1usize..25, k in 0usize..4) {
        let s = common::random_sample(seed, 0, n, 2);
        let spec = kernel(k);
        let c = center(&gram(&spec, &s).unwrap());
        let cc = center(&c);
        prop_assert!(max_abs(&(&cc - &c)) <= 1e-12 * max_abs(&c).max(1.0));
        let cross = cross_centered_gram(&spec, &s, &s).unwrap();
        prop_assert!(max_abs(&(&cross - &c)) <= 1e-12 * max_abs(&c).max(1.0));
        for i in 0..n {
            prop_assert!(c.row(i).sum().abs() <= 1e-10 * max_abs(&c).max(1.0) * n as f64);
        }
    }

    #[test]
    fn psd_roots_reconstruct(seed in 0u64..100_000, n in 2usize..25, k in 0usize..4, dim in 1usize..4) {
        let s = common::random_sample(seed, 0, n, dim);
        let c = center(&gram(&kernel(k), &s).unwrap());
        let r = psd_roots(&c);
        let tol = 1e-8 * max_abs(&c).max(1e-12);
        prop_assert!(max_abs(&(&r.sqrt * &r.sqrt - &c)) <= tol);
        // pinv_sqrt·sqrt is the orthogonal projector onto the retained range of c.
        let p = &r.pinv_sqrt * &r.sqrt;
        prop_assert!(max_abs(&(&p * &p - &p)) <= 1e-6);
        prop_assert!(max_abs(&(&p * &c - &c)) <= 1e-6 * max_abs(&c).max(1e-12));
        prop_assert!(max_abs(&(&p - p.transpose())) <= 1e-9);
    }

    #[test]
    fn hs_inner_is_bilinear_and_bounded(seed in 0u64..100_000, n in 2usize..20, kx in 0usize..4, ky in 0usize..4, c in -3.0f64..3.0) {
        let a = operator(seed, n, kx, ky);
        let b = operator(seed + 1, n + 2, kx, ky);
        let ab = hs_inner(&a, &b).unwrap();
        let (na, nb) = (hs_norm_sq(&a).unwrap(), hs_norm_sq(&b).unwrap());
        prop_assert!(ab * ab <= na * nb * (1.0 + 1e-10) + 1e-24);
        let ca = a.scaled(c).unwrap();
        prop_assert!((hs_inner(&ca, &b).unwrap() - c * ab).abs() <= 1e-10 * (na * nb).sqrt().max(1e-12) * (1.0 + c.abs()));
        prop_assert!((hs_inner(&b, &a).unwrap() - ab).abs() <= 1e-12 * (na * nb).sqrt().max(1e-12));
        let d = hs_distance_sq(&a, &b).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert!((d - (na - 2.0 * ab + nb)).abs() <= 1e-10 * (na + nb).max(1e-12));
        prop_assert!(hs_distance_sq(&a, &a).unwrap() <= 1e-10 * na.max(1e-12));
    }

    #[test]
    fn spectrum_accounts_for_norm(seed in 0u64..100_000, n in 2usize..20, kx in 0usize..4, ky in 0usize..4) {
        let a = operator(seed, n, kx, ky);
        let norm = hs_norm_sq(&a).unwrap();
        let d = singular_spectrum(&a, n).unwrap();
        let total: f64 = d.singular_values.iter().map(|s| s * s).sum();
        prop_assert!((total - norm).abs() <= 1e-8 * norm.max(1e-12), "{} vs {}", total, norm);
        prop_assert!(d.singular_values.windows(2).all(|w| w[0] >= w[1]));
        for i in 0..d.rank().min(3) {
            for side in [Side::Left, Side::Right] {
                let f = d.function(&a, i, side);
                prop_assert!((rkhs_norm_sq(&f).unwrap() - 1.0).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn intensities_are_consistent(seed in 0u64..100_000, n in 2usize..30, kx in 0usize..4, ky in 0usize..4) {
        let g = operator(seed, n, kx, ky).gram_pair().unwrap();
        for r in [rho_lw(&g), rho_scose(&g)] {
            let rho = r.rho.unwrap();
            prop_assert!((0.0..=1.0).contains(&rho));
            if r.clamped {
                prop_assert_eq!(rho, 1.0);
            }
            if n == 2 {
                prop_assert!(rho.abs() < 1e-9);
            }
        }
        let lw = rho_lw(&g);
        prop_assert_eq!(lw.clamped, lw.b2 > lw.d2);
    }

    #[test]
    fn shrunk_statistics_never_exceed_plain(seed in 0u64..100_000, n in 2usize..16, kx in 0usize..4, ky in 0usize..4) {
        let g = operator(seed, n, kx, ky).gram_pair().unwrap();
        let h = hsic_n(&g);
        let slack = 1e-12 * h.max(1e-300);
        prop_assert!(hsic_lw(&g) <= h + slack);
        prop_assert!(hsic_scose(&g) <= h + slack);
        let grid = default_lambda_grid(&g, 8).unwrap();
        let (f, _) = hsic_fcose_fitted(&g, &grid).unwrap();
        prop_assert!(f <= h * (1.0 + 1e-9) + 1e-15, "{} > {}", f, h);
        prop_assert!(f >= 0.0);
    }

    #[test]
    fn lw_shrunk_norm_is_scaled_plain_norm(seed in 0u64..100_000, n in 2usize..20, kx in 0usize..4, ky in 0usize..4) {
        let plain = operator(seed, n, kx, ky);
        let g = plain.gram_pair().unwrap();
        let r = rho_lw(&g);
        let shrunk = apply_shrinkage(&plain, &r).unwrap();
        let expected = (1.0 - r.rho.unwrap()).powi(2) * r.d2;
        prop_assert!((hs_norm_sq(&shrunk).unwrap() - expected).abs() <= 1e-10 * r.d2.max(1e-12));
        prop_assert!((hsic_lw(&g) - expected).abs() <= 1e-12 * r.d2.max(1e-12));
    }

    #[test]
    fn statistics_are_permutation_invariant(seed in 0u64..100_000, n in 3usize..14, kx in 0usize..4, ky in 0usize..4) {
        let x = common::random_sample(seed, 0, n, 2);
        let y = common::random_sample(seed, 1, n, 1);
        let perm: Vec<usize> = (0..n).map(|i| (i * 5 + 2) % n).collect();
        let mut seen = perm.clone();
        seen.sort_unstable();
        prop_assume!(seen == (0..n).collect::<Vec<_>>());
        let g1 = GramPair::from_samples(&x, &y, &kernel(kx), &kernel(ky)).unwrap();
        let g2 = GramPair::from_samples(&x.permuted(&perm), &y.permuted(&perm), &kernel(kx), &kernel(ky)).unwrap();
        let grid = default_lambda_grid(&g1, 6).unwrap();
        for kind in StatisticKind::ALL {
            let a = statistic(&g1, kind, &grid).unwrap();
            let b = statistic(&g2, kind, &grid).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-12), "{}: {} vs {}", kind, a, b);
        }
    }
}

#[test]
fn single_sample_is_rejected_only_where_undefined() {
    let s = SampleSet::from_scalars(&[1.0]).unwrap();
    let g = GramPair::from_samples(&s, &s, &KernelSpec::Linear, &KernelSpec::Linear).unwrap();
    assert_eq!(hsic_n(&g), 0.0);
    assert!(hsic_fcose_fitted(&g, &[1.0]).is_err());
}

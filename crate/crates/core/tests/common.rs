#![allow(dead_code)]

use kshrink::kernels::{KernelSpec, SampleSet};
use kshrink::rng;
use rand::Rng;
use rand_distr::StandardNormal;

pub fn random_sample(seed: u64, tag: u64, n: usize, dim: usize) -> SampleSet {
    let mut g = rng::stream(seed, &[tag]);
    let data: Vec<f64> = (0..n * dim).map(|_| g.sample::<f64, _>(StandardNormal)).collect();
    SampleSet::from_flat(data, dim).unwrap()
}

pub fn all_kernels() -> Vec<KernelSpec> {
    vec![
        KernelSpec::Linear,
        KernelSpec::polynomial(2, 1.0).unwrap(),
        KernelSpec::gaussian(1.3).unwrap(),
        KernelSpec::laplace(0.8).unwrap(),
    ]
}

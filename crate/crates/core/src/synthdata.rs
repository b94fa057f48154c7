//! Seeded generators for the synthetic benchmark distributions.
//!
//! Each generator returns a paired sample `(x, y)`:
//!
//! * `HollowGaussian`: standard 2-d Gaussian conditioned on `‖(x, y)‖ ≥ r`.
//! * `Sinusoid`: density `∝ 1 + a·sin(2πf x)·sin(2πf y)` on the unit square.
//! * `FourGaussians`: four isotropic Gaussians at `(±c, ±c)`, the whole
//!   configuration rotated by θ. θ = 0 is a product distribution.
//! * `Grid2d`: Gaussian blobs on the even cells of a `cells × cells`
//!   checkerboard lattice with spacing `1/f`.
//! * `GaussianNd`: `p`-dimensional standard Gaussian; `y` duplicates `x`.
//! * `IndependentProduct`: a base distribution with `y` randomly permuted,
//!   which makes `x` and `y` exactly independent.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::SampleSet;
use crate::rng;

/// Acceptance rates below this abort rejection sampling.
pub const MIN_ACCEPTANCE: f64 = 1e-4;
/// Proposals drawn before the acceptance rate is checked against [`MIN_ACCEPTANCE`].
pub const ACCEPTANCE_CHECK_AFTER: u64 = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    HollowGaussian { radius: f64 },
    Sinusoid { frequency: f64, amplitude: f64 },
    FourGaussians { theta: f64, center: f64, spread: f64 },
    Grid2d { frequency: f64, cells: usize, spread: f64 },
    GaussianNd { dim: usize },
    IndependentProduct { base: Box<DistributionSpec> },
}

impl DistributionSpec {
    pub fn four_gaussians(theta: f64) -> Self {
        DistributionSpec::FourGaussians { theta, center: 2.0, spread: 0.5 }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidInput(msg.to_string()));
        match self {
            DistributionSpec::HollowGaussian { radius } => {
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return bad("hollow_gaussian radius must be >= 0");
                }
            }
            DistributionSpec::Sinusoid { frequency, amplitude } => {
                if !(*frequency > 0.0 && frequency.is_finite()) {
                    return bad("sinusoid frequency must be > 0");
                }
                if !(0.0..=1.0).contains(amplitude) {
                    return bad("sinusoid amplitude must lie in [0, 1]");
                }
            }
            DistributionSpec::FourGaussians { theta, center, spread } => {
                if !(0.0..=PI / 2.0).contains(theta) {
                    return bad("four_gaussians theta must lie in [0, pi/2]");
                }
                if !(center.is_finite() && *spread > 0.0 && spread.is_finite()) {
                    return bad("four_gaussians needs a finite center and a positive spread");
                }
            }
            DistributionSpec::Grid2d { frequency, cells, spread } => {
                if !(*frequency > 0.0 && frequency.is_finite()) {
                    return bad("grid2d frequency must be > 0");
                }
                if *cells < 2 {
                    return bad("grid2d needs at least 2 cells per side");
                }
                if !(*spread > 0.0 && spread.is_finite()) {
                    return bad("grid2d spread must be > 0");
                }
            }
            DistributionSpec::GaussianNd { dim } => {
                if *dim < 1 {
                    return bad("gaussian_nd dimension must be >= 1");
                }
            }
            DistributionSpec::IndependentProduct { base } => base.validate()?,
        }
        Ok(())
    }
}

/// Counts from a rejection-sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RejectionStats {
    pub proposed: u64,
    pub accepted: u64,
}

impl RejectionStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

/// Draws `n` points from `target` using proposals from `propose`.
///
/// `target` and `proposal_density` may be unnormalized, but
/// `target(x) <= bound · proposal_density(x)` must hold everywhere. The run
/// fails once the acceptance rate after [`ACCEPTANCE_CHECK_AFTER`] proposals
/// is below [`MIN_ACCEPTANCE`].
pub fn rejection_sample<R: Rng + ?Sized>(
    target: impl Fn(&[f64]) -> f64,
    mut propose: impl FnMut(&mut R) -> Vec<f64>,
    proposal_density: impl Fn(&[f64]) -> f64,
    bound: f64,
    n: usize,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, RejectionStats)> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidInput("rejection bound must be positive and finite".into()));
    }
    let mut stats = RejectionStats::default();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x = propose(rng);
        stats.proposed += 1;
        let u: f64 = rng.random();
        if u * bound * proposal_density(&x) <= target(&x) {
            out.push(x);
            stats.accepted += 1;
        }
        if stats.proposed >= ACCEPTANCE_CHECK_AFTER && stats.acceptance_rate() < MIN_ACCEPTANCE {
            return Err(Error::LowAcceptance { rate: stats.acceptance_rate(), min: MIN_ACCEPTANCE });
        }
    }
    Ok((out, stats))
}

/// Paired sample of size `n`; deterministic in `(spec, n, seed)`.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<(SampleSet, SampleSet)> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput("sample size must be >= 1".into()));
    }
    let mut rng = rng::stream(seed, &[]);
    let rng = &mut rng;
    let pairs: Vec<(f64, f64)> = match spec {
        DistributionSpec::HollowGaussian { radius } => {
            let r2 = radius * radius;
            let (pts, _) = rejection_sample(
                |p: &[f64]| if p[0] * p[0] + p[1] * p[1] >= r2 { 1.0 } else { 0.0 },
                |g: &mut _| vec![gauss(g), gauss(g)],
                |_| 1.0,
                1.0,
                n,
                rng,
            )?;
            pts.into_iter().map(|p| (p[0], p[1])).collect()
        }
        DistributionSpec::Sinusoid { frequency, amplitude } => {
            let w = 2.0 * PI * frequency;
            let (pts, _) = rejection_sample(
                |p: &[f64]| 1.0 + amplitude * (w * p[0]).sin() * (w * p[1]).sin(),
                |g: &mut _| vec![g.random::<f64>(), g.random::<f64>()],
                |_| 1.0,
                1.0 + amplitude,
                n,
                rng,
            )?;
            pts.into_iter().map(|p| (p[0], p[1])).collect()
        }
        DistributionSpec::FourGaussians { theta, center, spread } => {
            let (s, c) = theta.sin_cos();
            (0..n)
                .map(|_| {
                    let corner = rng.random_range(0..4u8);
                    let cx = if corner & 1 == 0 { *center } else { -center };
                    let cy = if corner & 2 == 0 { *center } else { -center };
                    let px = cx + spread * gauss(rng);
                    let py = cy + spread * gauss(rng);
                    (c * px - s * py, s * px + c * py)
                })
                .collect()
        }
        DistributionSpec::Grid2d { frequency, cells, spread } => {
            let spacing = 1.0 / frequency;
            let sites: Vec<(f64, f64)> = (0..*cells)
                .flat_map(|i| (0..*cells).map(move |j| (i, j)))
                .filter(|(i, j)| (i + j) % 2 == 0)
                .map(|(i, j)| (i as f64 * spacing, j as f64 * spacing))
                .collect();
            let sd = spread * spacing;
            (0..n)
                .map(|_| {
                    let (cx, cy) = sites[rng.random_range(0..sites.len())];
                    (cx + sd * gauss(rng), cy + sd * gauss(rng))
                })
                .collect()
        }
        DistributionSpec::GaussianNd { dim } => {
            let data: Vec<f64> = (0..n * dim).map(|_| gauss(rng)).collect();
            let x = SampleSet::from_flat(data, *dim)?;
            return Ok((x.clone(), x));
        }
        DistributionSpec::IndependentProduct { base } => {
            let (x, y) = sample(base, n, rng::derive_seed(seed, &[1]))?;
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng::stream(seed, &[2]));
            return Ok((x, y.permuted(&perm)));
        }
    };
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    Ok((SampleSet::from_scalars(&xs)?, SampleSet::from_scalars(&ys)?))
}

fn gauss<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

//! # kshrink
//!
//! Shrinkage estimators for cross-covariance operators in reproducing
//! kernel Hilbert spaces, and kernel independence tests built on them.
//!
//! The sample cross-covariance operator `S_XY` is a poor estimator of the
//! population operator at small sample sizes: its leading singular values
//! are biased upward. This crate provides three estimators that shrink it
//! toward the zero operator:
//!
//! | estimator | form | intensity |
//! |-----------|------|-----------|
//! | LW        | `(1 − ρ)₊ S_XY` | `ρ = b²/d²`, closed form |
//! | SCOSE     | `(1 − ρ)₊ S_XY` | closed-form leave-one-out |
//! | FCOSE     | `Σ_i (β_i/n) φ̃(x_i) ⊗ ψ̃(y_i)` | `β = (K̃∘L̃ + λI)⁻¹ K̃∘L̃ 1`, λ by LOOCV |
//!
//! Shrunk HSIC statistics (`‖S‖²_HS` for each estimator) plug into the
//! usual permutation test; see [`hsic`].
//!
//! ```
//! use kshrink::{hsic, kernels::{GramPair, KernelSpec, SampleSet}, shrinkage};
//!
//! let x = SampleSet::from_scalars(&[0.0, 1.0, 2.0]).unwrap();
//! let g = GramPair::from_samples(&x, &x, &KernelSpec::Linear, &KernelSpec::Linear).unwrap();
//! assert!((shrinkage::rho_lw(&g).rho.unwrap() - 1.0 / 6.0).abs() < 1e-12);
//! assert!((hsic::hsic_n(&g) - 4.0 / 9.0).abs() < 1e-12);
//! ```

pub mod error;
pub mod hsic;
pub mod kernels;
pub mod linalg;
pub mod operators;
pub mod rng;
pub mod shrinkage;
pub mod synthdata;

pub use error::{Error, Result};

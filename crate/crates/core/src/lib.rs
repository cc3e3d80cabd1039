//! Nonparametric estimation of the Fisher information for location and of the
//! MMSE in additive Gaussian noise.
//!
//! The crate is organised bottom-up:
//!
//! - [`kernel_density`]: Gaussian kernel estimates of a density and its
//!   derivative, the empirical CDF and the DKW machinery behind the sup-norm
//!   concentration bound.
//! - [`quadrature`]: deterministic composite Simpson integration.
//! - [`fisher_estimators`]: the Bhattacharya plug-in estimator, the clipped
//!   estimator and the MMSE estimators obtained through Brown's identity.
//! - [`theory_bounds`]: finite-sample error bounds, confidence bounds and the
//!   sample-complexity optimiser.
//! - [`gaussian_channel`]: synthetic data `Y = sqrt(snr) X + Z` and closed-form
//!   ground truth for Gaussian and binary inputs.
//! - [`experiment_harness`]: reproducible Monte Carlo experiments emitting CSV
//!   and JSON reports.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment_harness;
pub mod fisher_estimators;
pub mod gaussian_channel;
pub mod kernel_density;
pub mod quadrature;
pub mod stats;
pub mod theory_bounds;

pub use error::{Error, Result};
pub use fisher_estimators::{
    bhattacharya, clipped, mmse_from_fisher, score_at, ClipEnvelope, EstimateResult, EstimatorConfig, EstimatorKind,
};
pub use gaussian_channel::{sample_channel, true_fisher, true_mmse, ChannelModel, InputLaw};
pub use kernel_density::{kde_at, kde_deriv_at, KernelSpec, SampleSet};
pub use quadrature::integrate;

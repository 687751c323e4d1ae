//! Randomized release primitives.
//!
//! * [`laplace_sample`]: a Laplace(0, b) draw from a [`RandomSource`](crate::rng::RandomSource).
//! * [`sbh_release`]: the stability-based histogram. Each point in the input
//!   support gets Laplace(2/ε) noise and is kept only if its noisy count
//!   exceeds `T = 1 + (2/ε)·ln(2/δ)`. Points outside the support are never
//!   touched, so zero counts are never released.
//! * [`full_domain_laplace`] and [`restricted_dictionary_laplace`]: the
//!   Laplace(1/ε) histogram over every domain cell, or over a whitelist of
//!   cells.
//! * Closed-form release probabilities for a point of a given count.

mod full_domain;
mod histogram;
mod laplace;
mod params;
mod sbh;

pub use full_domain::{
    full_domain_laplace, full_domain_laplace_capped, restricted_dictionary_laplace,
    DEFAULT_FEASIBILITY_CAP,
};
pub use histogram::{Histogram, MechanismKind, NoisyHistogram, Rounding};
pub use laplace::{laplace_sample, laplace_tail};
pub use params::PrivacyParams;
pub use sbh::{
    group_release_probability, release_probability, sbh_noise_scale, sbh_release,
    sbh_release_with, sbh_threshold, singleton_release_probability,
};

//! Differentially private histogram release for tap-on/tap-off trip data.
//!
//! The crate covers the whole path from raw trips to a published release
//! and back:
//!
//! * [`mechanisms`]: stability-based histogram (SBH) release, the
//!   full-domain Laplace histogram, and closed-form release probabilities.
//! * [`accountant`]: basic composition with exact δ arithmetic.
//! * [`pipeline`]: time binning, stop aggregation, tap-on/tap-off
//!   decoupling, partitioning, density reports, and the end-to-end release
//!   with its manifest.
//! * [`auditor`]: attacks on a published bundle: suppressed-mass inference,
//!   domain exhaustion, parameter inference, and candidate exclusion.
//! * [`datagen`]: seeded synthetic trips and small fixtures.
//! * [`cli`]: the `tripdp` command-line front end.
//!
//! See `examples/` for one runnable program per capability.

pub mod accountant;
pub mod auditor;
pub mod cli;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod mechanisms;
pub mod pipeline;
pub mod rng;
pub mod schema;

pub use error::{Error, Result};

//! Probe-spin decoherence from disordered, power-law coupled spin baths.
//!
//! The crate covers the whole forward model (bath noise, positional disorder,
//! pulse-sequence filter functions, Monte Carlo averaging, closed-form
//! profiles) and the inverse problem (stretched-exponential fits, dimension
//! classification, correlation-time and density extraction).
//!
//! Everything here is `no_std` with `alloc`. File formats, configuration and
//! the command-line front end live in the `spinbath` crate.

#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod curve;
pub mod error;
pub mod geometry;
pub mod inference;
pub mod lsq;
pub mod math;
pub mod monte_carlo;
pub mod noise;
pub mod profile;
pub mod quad;
pub mod rng;
pub mod runner;
pub mod sequence;
pub mod stats;

pub use curve::CoherenceCurve;
pub use error::{Error, Result};
pub use runner::{Runner, Sequential};

/// Crate version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

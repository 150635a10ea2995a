//! Performance analysis for MIMO spatial multiplexing with zero-forcing
//! detection under transmit-correlated Rician/Rayleigh fading.
//!
//! The crate has two halves that check each other:
//!
//! - analytic: the distribution of the per-stream ZF SNR (an infinite
//!   linear combination of gamma distributions when the detected stream is
//!   Rician and the interferers Rayleigh; a single gamma law when the
//!   detected stream is Rayleigh and uncorrelated with the others), and
//!   the error-probability, outage, and ergodic-capacity expressions built
//!   on it ([`snr`], [`perf`], [`special`], [`series`]);
//! - simulation: a seeded Monte Carlo channel sampler with two independent
//!   ZF SNR formulas and estimators for every analytic quantity ([`mc`]).
//!
//! Scenarios are described by [`channel::ChannelConfig`] (antenna counts,
//! K-factor, azimuth spread, array geometry, input SNR) from which
//! [`channel::derive_params`] produces the sufficient statistics
//! `(N, Gamma1, a)` that all closed forms consume.

// Guards are written `!(x > 0.0)` on purpose: unlike `x <= 0.0` they also
// reject NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod mc;
pub mod perf;
pub mod quad;
pub mod series;
pub mod snr;
pub mod special;

pub use channel::{ChannelConfig, DerivedParams, FadingCase};
pub use error::{Error, Result};
pub use mc::McEstimate;
pub use perf::{AepMethod, AepResult};
pub use series::{SeriesPolicy, SeriesResult};
pub use snr::{GammaMixture, VirtualApprox};

/// Complex scalar used throughout.
pub type Cx = num_complex::Complex64;

/// Complex matrix type used throughout (receive antennas x transmit antennas
/// for channels, square for covariance matrices).
pub type CMat = nalgebra::DMatrix<Cx>;

/// Complex column vector.
pub type CVec = nalgebra::DVector<Cx>;

/// Decibel to linear power conversion.
#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Linear power to decibel conversion.
#[inline]
pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

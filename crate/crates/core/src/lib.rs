//! Quantized precoding for the massive MU-MIMO downlink.
//!
//! A base station with `B` antennas and finite-resolution DACs serves `U`
//! single-antenna users over a narrowband Rayleigh channel `y = Hx + n`.
//! This crate provides:
//!
//! * [`channel`] — i.i.d. Rayleigh channel, symbol and noise sampling, and
//!   the imperfect-CSI corruption model.
//! * [`quantizer`] — uniform symmetric DAC model: labels, thresholds,
//!   distortion-optimal step size and the power-normalizing output scale.
//! * [`linear`] — WF/ZF/MRT linear precoders and the linear-quantized
//!   pipeline `x = Q(Ps)`.
//! * [`bussgang`] — closed-form analysis of linear-quantized precoding:
//!   Bussgang gain, distortion covariance, the 1-bit arcsine-law output
//!   covariance, per-user SINDR, rate lower bound and large-system
//!   approximations.
//! * [`nonlinear`] — 1-bit nonlinear precoders: exhaustive search,
//!   semidefinite relaxation, squared-infinity-norm Douglas-Rachford
//!   splitting (SQUID) and sphere precoding.
//! * [`sdp`] — a small dense splitting solver for the diagonally-constrained
//!   semidefinite relaxation.
//! * [`sim`] — deterministic Monte-Carlo sweep engine (BER, achievable rate,
//!   CSI-error robustness, analytic curves) with CSV output; driven by the
//!   `qmimo` binary.

pub mod bussgang;
pub mod channel;
pub mod error;
pub mod linear;
pub mod nonlinear;
pub mod quantizer;
pub mod rng;
pub mod sdp;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Cx = num_complex::Complex64;
/// Dynamically-sized complex matrix.
pub type CMat = nalgebra::DMatrix<Cx>;
/// Dynamically-sized complex column vector.
pub type CVec = nalgebra::DVector<Cx>;
/// Dynamically-sized real matrix.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dynamically-sized real column vector.
pub type RVec = nalgebra::DVector<f64>;

//! Spectral Galerkin solver for two-dimensional Darcy-Benard convection of a
//! slightly compressible fluid, together with the a priori estimate checks
//! that certify its energy stability.
//!
//! The perturbation system lives on the unit cell `[0,1]^2` (horizontal
//! period 1, layer depth 1):
//!
//! ```text
//!   u = -grad(pi) + R theta k - beta_hat pi k      (Darcy momentum)
//!   div u = 0
//!   theta_t + u . grad theta = w + Lap theta       (temperature)
//!   w = theta = 0 at z = 0, 1
//! ```
//!
//! `R` is the Darcy-Rayleigh number and `beta_hat` the compressibility
//! number. The substitution `Pi = exp(beta_hat z) pi` turns the pressure
//! problem into
//!
//! ```text
//!   Lap Pi - beta_hat Pi_z = R exp(beta_hat z) theta_z,   Pi_z = 0 at z = 0, 1,
//! ```
//!
//! which is solved per horizontal mode by a dense Galerkin system. The sign
//! `exp(+beta_hat z)` on the right side is the one that makes
//! `div u = -exp(-beta_hat z) (Lap Pi - beta_hat Pi_z) + R theta_z` vanish
//! identically; the velocity itself is reconstructed through the stream
//! function so that the discrete field is divergence-free to round-off.
//!
//! The crate is `no_std` (with `alloc`); all I/O lives in the companion CLI
//! crate.

#![no_std]
#![forbid(unsafe_code)]
// Indexed loops and `% 2` parity tests mirror the stencil and recurrence
// notation, and `!(x > 0)`-style guards reject NaN, which the suggested
// rewrites would silently accept.
#![allow(clippy::needless_range_loop)]
#![allow(clippy::manual_is_multiple_of)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod basis;
pub mod coupling;
pub mod dynamics;
pub mod energy;
pub mod fd;
pub mod pressure;
pub mod steady;

mod math;

pub use basis::{GridField, Parity, SpectralField};

/// Crate version, embedded in output records by downstream tools.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

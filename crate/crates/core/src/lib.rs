//! Distances between the small-time laws of one-dimensional SDEs and their
//! one-step Euler-Maruyama proxies.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; file formats, configuration and threading live in the
//! `sde-tv-lab` companion crate, which plugs a parallel [`exec::Executor`] into
//! the Monte Carlo and experiment routines.
//!
//! Modules:
//! - [`model`]: coefficient catalog, Euler proxy, coefficient gaps, ellipticity.
//! - [`simulate`]: Brownian increments, Euler paths, exact GBM, coupled Monte Carlo.
//! - [`density`]: closed-form laws, Hermite derivatives, Fokker-Planck solver,
//!   Gaussian envelope fits.
//! - [`distance`]: total variation, W1, Gaussian smoothing and the
//!   Richardson-Romberg smoothed estimator.
//! - [`romberg`]: exact rational extrapolation weights.
//! - [`rates`]: distance curves over time grids and log-log slope fits.
#![no_std]
// `!(a > b)` is the NaN-rejecting comparison throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod density;
pub mod distance;
pub mod error;
pub mod exec;
pub mod model;
pub mod numeric;
pub mod rates;
pub mod romberg;
pub mod simulate;

pub use error::{Error, ErrorCategory, Result};

//! Critical moment order of log-exponential-power-law samples.
//!
//! For `X = exp(Y)` with `1 - F_Y(y) = exp(-h(y))` and `h(y) = L(y) y^rho`,
//! the sample moment `S(n, q) = mean(X^q)` tracks `E X^q` only up to a
//! critical order `q_c(n)`; above it `ln S` turns linear in `q`. This crate
//! provides the tail families, the theoretical frontier, the order-statistics
//! estimators of `q_c(n)` and the sieve-corrected variants for correlated
//! series.
//!
//! The crate is `no_std` and needs only `alloc`. IO, FFT-based synthesis,
//! the Monte-Carlo harness and the CLI live in the `momentgate` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod dependence;
mod error;
pub mod estimators;
pub mod hermite;
pub mod quadrature;
pub mod rng;
mod roots;
pub mod special;
pub mod stats;
pub mod tail_models;
pub mod theory;

pub use dependence::{CorrectionParams, CovarianceSpec, SievedSample};
pub use error::{Error, Result};
pub use estimators::{OrderedSample, QcEstimate, WeightScheme};
pub use tail_models::{Family, Sample, Tail, TailModel};
pub use theory::{CriticalCurve, MomentMethod, MomentValue};

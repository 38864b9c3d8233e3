//! Base-`m` Chan continued fractions and their metric theory.
//!
//! - [`cf`]: digits, shift, convergents, fundamental intervals (exact and float).
//! - [`measures`]: the invariant measure `γ_m`, natural extension, extended measure.
//! - [`transfer`]: the Perron–Frobenius operator under `γ_m` on grid functions.
//! - [`chain`]: the digit/state Markov chain, its kernel and conditional laws.
//! - [`gauss_kuzmin`]: empirical convergence of `μ(T^n < x)` to the limit law.

pub mod cf;
pub mod chain;
mod error;
pub mod gauss_kuzmin;
pub mod io;
pub mod measures;
pub mod quadrature;
mod rational;
pub mod selftest;
pub mod transfer;
mod util;

pub use error::{Error, Result};
pub use rational::ExactRational;
pub use util::inv_pow_f64;

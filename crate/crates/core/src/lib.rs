//! Exact Euler-MacLaurin summation through Borel-Laplace resummation.
//!
//! The crate evaluates `Σ_{k=1}^N f(k/N)` as `N∫f + ½(f(1) − f(0))` plus a
//! Laplace integral of an explicit kernel, with exponentially small
//! corrections from singularities near the summation interval. Around this
//! core it offers the kernels themselves, Stirling's formula in exact form,
//! WKB solutions of first-order difference equations and quantum-factorial
//! sums.

pub mod borel;
pub mod emsum;
pub mod error;
pub mod funcs;
pub mod scalar;
pub mod qtop;
pub mod quad;
pub mod selftest;
pub mod series;
pub mod wkb;

pub use error::{Error, Result};
pub use scalar::{Precision, Scalar};

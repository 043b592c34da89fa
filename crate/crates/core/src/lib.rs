//! Spectral toolkit for heat flows with critical electromagnetic potentials.
//!
//! The crate is `no_std` (with `alloc`). Everything here is a pure function of
//! its inputs; IO, scenario files and the command line live in the `magheat`
//! companion crate.

#![no_std]
// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod almgren;
pub mod angular;
pub mod cn;
mod error;
pub mod field;
pub mod inequality;
pub mod kernel;
pub mod ou;
pub mod problem;
pub mod quadrature;
pub mod special;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Imaginary unit.
pub const I: C64 = C64::new(0.0, 1.0);

//! Evaluation and verification of multiple very-well-poised (basic)
//! hypergeometric summation formulas.
//!
//! The crate is `no_std` with `alloc`. Everything numeric runs through a
//! [`kernel::Kernel`] at a chosen binary precision; parameters are exact
//! rationals so that poles, zeros and truncation are decided exactly.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod eval;
pub mod exact;
pub mod exponent;
pub mod identities;
pub mod kernel;
pub mod params;
pub mod product;
pub mod real;
pub mod summation;
pub mod terms;

pub use error::{Error, Result};
pub use eval::{Evaluator, NumEval, RatEval, Tracked};
pub use exact::CRat;
pub use kernel::{Certified, Kernel, PrecisionContext};
pub use real::{Complex, ComplexValue, LogComplex, Real};

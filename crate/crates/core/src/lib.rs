//! Quantized autonomous heat machine: a two-level system between a hot and a
//! cold bath, coupled to an oscillator piston.

// `!(x > 0.0)` checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod expm;
pub mod operators;
pub mod superop;

pub use error::{Error, Result};
pub mod bath;
pub mod lindblad;
pub mod phase_space;
mod quad;
pub mod thermo;
pub mod trajectory;

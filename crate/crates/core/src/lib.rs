//! Entanglement concentration of two-mode squeezed vacuum by a cross-Kerr
//! coupling to a coherent ancilla, balanced homodyne detection of the
//! ancilla and a feed-forward phase correction.
//!
//! The crate carries the linearized closed forms alongside exact
//! truncated-Fock numerics so the two can be compared point by point.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod feedforward;
pub mod homodyne;
pub mod kerr;
pub mod oracle;
pub mod protocol;
pub mod quad;
pub mod run;
pub mod sampling;
pub mod schmidt;
pub mod sweep;
pub mod validate;

pub use error::{Error, Result};

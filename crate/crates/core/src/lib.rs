//! Behavioral simulator and bias controllers for an interference-adaptive
//! GaN LNA receiver front-end.

// `!(x > y)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod characterization;
pub mod control;
pub mod devices;
pub mod error;
pub mod looptheory;
pub mod sim;

pub use error::{Error, Result};

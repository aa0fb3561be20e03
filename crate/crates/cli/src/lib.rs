//! Front end for the `plasmaball` library: configuration, sweeps with CSV and
//! JSON output, and the verification checks.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod commands;
pub mod config;
pub mod output;

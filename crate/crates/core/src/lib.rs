//! Clustered random access for massive IoT uplinks: closed-form success
//! probabilities and delay, a Monte-Carlo network simulator to validate
//! them, and a golden-section search for the optimal cluster-head ratio.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod model;
pub mod optimize;
pub mod sim;
pub mod special;

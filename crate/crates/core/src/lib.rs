//! Non-sequential Monte Carlo ray tracing of fluorescence collection from
//! emitters inside a truncated-pyramid diamond bonded to a conical anvil.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod config;
pub mod detect;
pub mod geometry;
pub mod physics;
pub mod report;
pub mod scene;
pub mod sources;
pub mod tracer;
mod units;

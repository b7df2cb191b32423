//! Numerical avoidability criteria for bubble collections under the censored
//! α-stable process in a ball, with a Monte-Carlo simulator for cross-checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod champagne;
pub mod criteria;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod simulate;
pub mod whitney;

pub use error::{Error, Result};
pub use geometry::{BallDomain, Point};

//! Simulation and numerics for the disordered Chinese restaurant process.
//!
//! Customers join table `i` with probability proportional to `W_i·S_i` and
//! open a new table with probability proportional to `θ`. The crate provides
//! the discrete process, its continuous-time Yule embedding, extreme-value
//! scaling, and the Poisson point-process comparisons built on top of them.

// `!(x > 0.0)` style guards are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod continuous;
pub mod discrete;
pub mod error;
pub mod experiments;
pub mod fitness;
pub mod numeric;
pub mod pointprocess;
pub mod rng;
pub mod scaling;
pub mod stats;
pub mod yule;

pub use error::{Error, Result};
pub use fitness::{EvtClass, FitnessKind, FitnessSpec};

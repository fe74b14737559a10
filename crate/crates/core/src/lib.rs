//! Frozen-model analysis of maximum independent sets on random regular graphs.
//!
//! The crate covers graph sampling in the configuration model, exact and greedy
//! independent sets, the coarsening map onto frozen configurations, the scalar
//! threshold formulas, the Bethe recursions of the message model, the spectral
//! checks on the edge transition matrix, and exact forcing probabilities.

pub mod analytic;
pub mod bethe;
pub mod coarsen;
mod error;
pub mod forcing;
pub mod graphgen;
pub mod hessian;
pub mod isalg;
pub mod numeric;

pub use error::{Error, Result};

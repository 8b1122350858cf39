//! Distributed zeroth-order block coordinate descent over agent networks,
//! with a model-free multi-agent LQR learning testbed.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod netgraph;
pub mod rng;
pub mod lqr;
pub mod zoo;

pub use error::{Error, Result};

//! Toolkit for studying penalty-weight choices when turning linearly
//! constrained binary optimization into QUBO form: certified SDP-based
//! penalty bounds, exact spectral-gap diagnostics, integer-program
//! gadgetization, benchmark-instance generation, and a noiseless Trotterized
//! annealing simulator.

pub mod anneal;
pub mod error;
pub mod gadgets;
pub mod instances;
pub mod model;
pub mod penalty;
pub mod sdp;
pub mod spectrum;

pub use error::{Error, Result};
pub use model::{Assignment, Lcbo, Qubo};

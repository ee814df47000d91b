//! Robust distributional models by aggregating loss distributions under
//! first- and second-order stochastic dominance, robust risk evaluation and
//! robust optimization.

pub mod conic;
pub mod dist;
pub mod error;
pub mod harness;
pub mod lattice;
pub mod numeric;
pub mod risk;
pub mod robustopt;
pub mod uncertainty;

pub use dist::{Atoms, Distribution, PiFunction};
pub use error::{Error, Result};

//! Conley index theory for LS-type flows in finite-dimensional split models.
//!
//! The crate builds combinatorial index pairs from sampled trajectories,
//! computes classical and E-shifted Conley indices through Z₂ cubical
//! homology, computes local Morse homology of gradient flows by counting
//! connecting orbits mod 2, and checks continuation invariance numerically.

pub mod catalog;
pub mod conley_e;
pub mod continuation;
pub mod error;
pub mod isolation;
pub mod ls_system;
pub mod morse_local;
pub mod z2_chain;

pub use error::{Error, Result};

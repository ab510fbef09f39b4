//! Spherical-harmonic expansions of the fundamental solution of anisotropic,
//! multi-field linear PDEs, with independent reference oracles.

pub mod bench;
pub mod error;
pub mod evaluator;
pub mod expansion;
pub mod materials;
pub mod quadrature;
pub mod reference;
pub mod special;
pub mod symbol;

pub use error::{Error, Result};

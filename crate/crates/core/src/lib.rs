//! Coincidence-imaging simulator: SPDC biphoton and classically correlated
//! sources propagated through paraxial optical benches, plus finite-dimensional
//! bipartite state tools (Schmidt form, separable simulation, witnesses).

pub mod bench;
pub mod detection;
pub mod error;
pub mod grid;
pub mod optics;
pub mod qudit;
pub mod run;
pub mod sources;

pub use error::{Error, Result};

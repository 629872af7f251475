//! Numerical laboratory for planar traveling fronts of reaction-diffusion
//! systems: front solves, weighted essential spectra, modulation
//! decompositions, perturbation simulations and decay-rate verification.

pub mod analysis;
pub mod config;
pub mod error;
pub mod evolve;
pub mod field;
pub mod front;
pub mod linalg;
pub mod model;
pub mod norms;
pub mod pipeline;
pub mod projection;
pub mod spectrum;
pub mod spline;

pub use error::{LabError, Result};

//! Spectral Prandtl/Benjamin–Ono splitting solver for the unsteady triple-deck model,
//! with analytic-norm energy tracking and runtime audits of the energy identities.

pub mod error;
pub mod spectral;
pub mod weights;
pub mod bo;
pub mod deck;
pub mod norms;
pub mod ledger;
pub mod stepper;
pub mod audit;
pub mod reconstruct;
pub mod checkpoint;
pub mod config;
pub mod presets;
pub mod selftest;

pub use error::{Error, Result};
pub use spectral::{Grid, SpectralField, SurfaceSpectrum, Symbol};

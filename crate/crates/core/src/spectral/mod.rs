//! Tangential Fourier machinery and y-direction discrete calculus.

mod fft;
mod field;
mod grid;
pub mod tridiag;
pub mod ycalc;

pub use fft::{
    apply_multiplier, convolve, convolve_direct, forward_transform, inner_surface, inverse_transform,
    Spectral, Symbol,
};
pub(crate) use fft::{physical_dealiased, spectrum_dealiased};
pub use field::{SpectralField, SurfaceSpectrum};
pub use grid::Grid;
pub use ycalc::{d2dy2, ddy, integrate_y, integrate_y_full, CompactLaplacian};

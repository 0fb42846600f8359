//! Deterministic inputs for the kernel benchmarks in `benches/`.

use num_complex::Complex64;
use tripledeck_core::deck::DeckState;
use tripledeck_core::{Grid, SpectralField, SurfaceSpectrum};

/// Smooth field with every retained mode populated.
pub fn smooth_field(g: Grid) -> SpectralField {
    let mut f = SpectralField::from_fn(g, |idx, xi, y| {
        let phase = 0.7 * idx as f64 + 0.3 * y;
        Complex64::from_polar((-0.2 * xi * xi).exp() * y * (-0.5 * y * y).exp(), phase)
    });
    f.symmetrize();
    f.zero_boundary_rows();
    f
}

pub fn smooth_surface(g: Grid) -> SurfaceSpectrum {
    let mut a = SurfaceSpectrum::from_fn(g, |idx, xi| Complex64::from_polar((-0.2 * xi * xi).exp(), 1.3 * idx as f64));
    a.symmetrize();
    a
}

pub fn bench_state(g: Grid, amp: f64) -> DeckState {
    let mut s = DeckState::zeros(g, 0.0, 1.0 / 64.0);
    s.wbar = smooth_field(g);
    s.a = smooth_surface(g);
    s.wbar.scale(amp);
    s.a.scale(amp);
    s
}

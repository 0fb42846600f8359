//! Finite differences and quadrature along the uniform y-grid.

use num_complex::Complex64;
use rayon::prelude::*;
use std::ops::{Add, Mul, Sub};

use super::field::{SpectralField, SurfaceSpectrum};
use super::tridiag;

/// Scalar types the column kernels run on (`f64` and `Complex64`).
pub trait Scalar:
    Copy + Default + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> + Send + Sync
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// Second-order ∂y: central inside, one-sided at both ends.
pub fn ddy_col<T: Scalar>(f: &[T], dy: f64, out: &mut [T]) {
    let n = f.len();
    let h = 0.5 / dy;
    out[0] = (f[1] * 4.0 - f[0] * 3.0 - f[2]) * h;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j - 1]) * h;
    }
    out[n - 1] = (f[n - 1] * 3.0 - f[n - 2] * 4.0 + f[n - 3]) * h;
}

/// Second-order ∂yy: central inside, one-sided four-point at both ends.
pub fn d2dy2_col<T: Scalar>(f: &[T], dy: f64, out: &mut [T]) {
    let n = f.len();
    let h = 1.0 / (dy * dy);
    out[0] = (f[0] * 2.0 - f[1] * 5.0 + f[2] * 4.0 - f[3]) * h;
    for j in 1..n - 1 {
        out[j] = (f[j + 1] - f[j] * 2.0 + f[j - 1]) * h;
    }
    out[n - 1] = (f[n - 1] * 2.0 - f[n - 2] * 5.0 + f[n - 3] * 4.0 - f[n - 4]) * h;
}

/// Cumulative trapezoid I_y[f] with I_0 = 0.
pub fn cumtrapz_col<T: Scalar>(f: &[T], dy: f64, out: &mut [T]) {
    out[0] = T::default();
    for j in 1..f.len() {
        out[j] = out[j - 1] + (f[j - 1] + f[j]) * (0.5 * dy);
    }
}

pub fn trapz_col<T: Scalar>(f: &[T], dy: f64) -> T {
    let n = f.len();
    let mut acc = (f[0] + f[n - 1]) * 0.5;
    for v in &f[1..n - 1] {
        acc = acc + *v;
    }
    acc * dy
}

fn map_columns(f: &SpectralField, kernel: impl Fn(&[Complex64], f64, &mut [Complex64]) + Sync) -> SpectralField {
    let dy = f.grid().dy();
    let mut out = SpectralField::zeros(*f.grid());
    let n_y = f.grid().n_y();
    out.data_mut()
        .par_chunks_mut(n_y)
        .zip(f.data().par_chunks(n_y))
        .for_each(|(o, c)| kernel(c, dy, o));
    out
}

pub fn ddy(f: &SpectralField) -> SpectralField {
    map_columns(f, ddy_col)
}

pub fn d2dy2(f: &SpectralField) -> SpectralField {
    map_columns(f, d2dy2_col)
}

/// I_y[f] at every node (cumulative trapezoid).
pub fn integrate_y(f: &SpectralField) -> SpectralField {
    map_columns(f, cumtrapz_col)
}

/// I_∞[f], realised as I_{y_max}[f].
pub fn integrate_y_full(f: &SpectralField) -> SurfaceSpectrum {
    let dy = f.grid().dy();
    let data = f.columns().map(|c| trapz_col(c, dy)).collect();
    SurfaceSpectrum::from_vec(*f.grid(), data).expect("column count matches grid")
}

/// Fourth-order compact Laplacian `M⁻¹D2` on interior nodes, Dirichlet ends.
///
/// `D2 = tridiag(1, −2, 1)/Δy²` and `M = tridiag(1, 10, 1)/12`. The first and last
/// interior rows fall back to the plain three-point stencil (M row = identity), since the
/// wall value of ∂yy f is not known. Boundary rows of the result are zero.
#[derive(Clone, Debug)]
pub struct CompactLaplacian {
    n_y: usize,
    dy: f64,
}

impl CompactLaplacian {
    pub fn new(n_y: usize, dy: f64) -> Self {
        Self { n_y, dy }
    }

    pub fn apply_col(&self, f: &[Complex64], out: &mut [Complex64]) {
        let n = self.n_y;
        let h = 1.0 / (self.dy * self.dy);
        let rhs: Vec<Complex64> =
            (1..n - 1).map(|j| (f[j + 1] - f[j] * 2.0 + f[j - 1]) * h).collect();
        let (sub, diag, sup) = self.mass_bands();
        let sol = tridiag::solve(&sub, &diag, &sup, &rhs);
        out[0] = Complex64::default();
        out[n - 1] = Complex64::default();
        out[1..n - 1].copy_from_slice(&sol);
    }

    /// Bands of the mass matrix M on the `n_y − 2` interior unknowns.
    pub fn mass_bands(&self) -> (Vec<Complex64>, Vec<Complex64>, Vec<Complex64>) {
        let m = self.n_y - 2;
        let mut sub = vec![Complex64::new(1.0 / 12.0, 0.0); m];
        let mut diag = vec![Complex64::new(10.0 / 12.0, 0.0); m];
        let mut sup = vec![Complex64::new(1.0 / 12.0, 0.0); m];
        for r in [0, m - 1] {
            sub[r] = Complex64::default();
            diag[r] = Complex64::new(1.0, 0.0);
            sup[r] = Complex64::default();
        }
        (sub, diag, sup)
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn apply(&self, f: &SpectralField) -> SpectralField {
        map_columns(f, |c, _, o| self.apply_col(c, o))
    }
}

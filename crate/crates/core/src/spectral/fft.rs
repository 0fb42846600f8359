//! Tangential transforms, multipliers and dealiased convolution.
//!
//! Forward convention: `f_k = Δx Σ_j f(x_j) e^{−iξ_k x_j}` on `x_j = −πL + jΔx`, so the
//! coefficients approximate `∫ f e^{−ixξ} dx`. The inverse is `(1/(2πL)) Σ_k f_k e^{iξ_k x}`.
//! With this pair, the spectrum of a physical product is
//! `(fg)_k = (1/(2πL)) Σ_m f_m g_{k−m}`, which is what [`convolve`] returns.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::{Arc, Mutex, OnceLock};

use super::field::{SpectralField, SurfaceSpectrum};
use super::grid::Grid;
use crate::error::{Error, Result};

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Plans {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new())).lock().unwrap();
    Plans { forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n) }
}

#[inline]
fn parity(idx: usize) -> f64 {
    if idx % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Row-wise forward transform; `phys` holds `n_rows` rows of `n_modes` samples.
fn forward_rows(grid: &Grid, phys: &[f64]) -> Vec<Complex64> {
    let n = grid.n_modes();
    let dx = grid.dx();
    let p = plans(n);
    let mut out: Vec<Complex64> = phys.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    out.par_chunks_mut(n).for_each(|row| {
        p.forward.process(row);
        for (idx, z) in row.iter_mut().enumerate() {
            *z *= dx * parity(idx);
        }
    });
    out
}

/// Row-wise inverse transform of spectra laid out as `n_rows` rows of `n_modes`.
fn inverse_rows(grid: &Grid, spec: &[Complex64]) -> Vec<f64> {
    let n = grid.n_modes();
    let scale = grid.spectral_measure();
    let p = plans(n);
    let mut buf: Vec<Complex64> = spec.to_vec();
    let mut out = vec![0.0; spec.len()];
    buf.par_chunks_mut(n).zip(out.par_chunks_mut(n)).for_each(|(row, dst)| {
        for (idx, z) in row.iter_mut().enumerate() {
            *z *= parity(idx);
        }
        p.inverse.process(row);
        for (d, z) in dst.iter_mut().zip(row.iter()) {
            *d = z.re * scale;
        }
    });
    out
}

/// Physical samples of a spectrum; layout `[row][x-node]`.
pub trait Spectral: Sized + Clone {
    fn grid(&self) -> &Grid;
    fn n_rows(&self) -> usize;
    /// Multiplies every coefficient of mode `idx` by `m(idx)`.
    fn scale_modes(&mut self, m: impl Fn(usize) -> Complex64 + Sync);
    fn to_physical(&self) -> Vec<f64>;
    fn from_physical(grid: &Grid, phys: &[f64]) -> Result<Self>;
    fn dealias_in_place(&mut self);
    /// Coefficient of mode `idx` at row `row`.
    fn coeff(&self, idx: usize, row: usize) -> Complex64;
    fn zeros_like(&self) -> Self;
    fn set_coeff(&mut self, idx: usize, row: usize, v: Complex64);
}

impl Spectral for SurfaceSpectrum {
    fn grid(&self) -> &Grid {
        SurfaceSpectrum::grid(self)
    }

    fn n_rows(&self) -> usize {
        1
    }

    fn scale_modes(&mut self, m: impl Fn(usize) -> Complex64 + Sync) {
        for (idx, z) in self.data_mut().iter_mut().enumerate() {
            *z *= m(idx);
        }
    }

    fn to_physical(&self) -> Vec<f64> {
        inverse_rows(self.grid(), self.data())
    }

    fn from_physical(grid: &Grid, phys: &[f64]) -> Result<Self> {
        if phys.len() != grid.n_modes() {
            return Err(Error::Dimension { expected: grid.n_modes(), got: phys.len() });
        }
        SurfaceSpectrum::from_vec(*grid, forward_rows(grid, phys))
    }

    fn dealias_in_place(&mut self) {
        self.dealias();
    }

    fn coeff(&self, idx: usize, _row: usize) -> Complex64 {
        self[idx]
    }

    fn zeros_like(&self) -> Self {
        SurfaceSpectrum::zeros(*self.grid())
    }

    fn set_coeff(&mut self, idx: usize, _row: usize, v: Complex64) {
        self[idx] = v;
    }
}

impl Spectral for SpectralField {
    fn grid(&self) -> &Grid {
        SpectralField::grid(self)
    }

    fn n_rows(&self) -> usize {
        self.grid().n_y()
    }

    fn scale_modes(&mut self, m: impl Fn(usize) -> Complex64 + Sync) {
        let n_y = self.grid().n_y();
        self.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            let s = m(idx);
            col.iter_mut().for_each(|z| *z *= s);
        });
    }

    fn to_physical(&self) -> Vec<f64> {
        let grid = *self.grid();
        let (n, n_y) = (grid.n_modes(), grid.n_y());
        let mut rows = vec![Complex64::new(0.0, 0.0); n * n_y];
        rows.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            for (idx, z) in row.iter_mut().enumerate() {
                *z = self.data()[idx * n_y + j];
            }
        });
        inverse_rows(&grid, &rows)
    }

    fn from_physical(grid: &Grid, phys: &[f64]) -> Result<Self> {
        let (n, n_y) = (grid.n_modes(), grid.n_y());
        if phys.len() != n * n_y {
            return Err(Error::Dimension { expected: n * n_y, got: phys.len() });
        }
        let rows = forward_rows(grid, phys);
        let mut data = vec![Complex64::new(0.0, 0.0); n * n_y];
        data.par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            for (j, z) in col.iter_mut().enumerate() {
                *z = rows[j * n + idx];
            }
        });
        SpectralField::from_vec(*grid, data)
    }

    fn dealias_in_place(&mut self) {
        self.dealias();
    }

    fn coeff(&self, idx: usize, row: usize) -> Complex64 {
        self.at(idx, row)
    }

    fn zeros_like(&self) -> Self {
        SpectralField::zeros(*self.grid())
    }

    fn set_coeff(&mut self, idx: usize, row: usize, v: Complex64) {
        self.set(idx, row, v);
    }
}

/// Spectrum of real samples (one row for a surface, `n_y` rows `[j][i]` for a field).
pub fn forward_transform<T: Spectral>(grid: &Grid, samples: &[f64]) -> Result<T> {
    T::from_physical(grid, samples)
}

pub fn inverse_transform<T: Spectral>(f: &T) -> Vec<f64> {
    f.to_physical()
}

/// Fourier multipliers used by the model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Symbol {
    /// iξ, i.e. ∂x.
    IXi,
    /// |ξ|, i.e. |∂x| (Hilbert transform of ∂x).
    AbsXi,
    /// iξ|ξ|, i.e. ∂x|∂x|.
    IXiAbsXi,
    /// ⟨ξ⟩^s with ⟨ξ⟩ = (1+ξ²)^{1/2}.
    Bracket(f64),
    /// e^{τ|ξ|}.
    ExpTau(f64),
    /// |ξ|^p.
    AbsXiPow(f64),
}

impl Symbol {
    pub fn eval(&self, xi: f64) -> Complex64 {
        let a = xi.abs();
        match *self {
            Symbol::IXi => Complex64::new(0.0, xi),
            Symbol::AbsXi => Complex64::new(a, 0.0),
            Symbol::IXiAbsXi => Complex64::new(0.0, xi * a),
            Symbol::Bracket(s) => Complex64::new((1.0 + xi * xi).powf(0.5 * s), 0.0),
            Symbol::ExpTau(tau) => Complex64::new((tau * a).exp(), 0.0),
            Symbol::AbsXiPow(p) => {
                Complex64::new(if a == 0.0 && p > 0.0 { 0.0 } else { a.powf(p) }, 0.0)
            }
        }
    }

    pub fn is_odd(&self) -> bool {
        matches!(self, Symbol::IXi | Symbol::IXiAbsXi)
    }
}

/// Coefficient-wise product with a symbol; odd symbols annihilate the Nyquist mode.
pub fn apply_multiplier<T: Spectral>(f: &T, symbol: Symbol) -> T {
    let grid = *f.grid();
    let nyq = grid.nyquist();
    let mut out = f.clone();
    out.scale_modes(|idx| {
        if idx == nyq && symbol.is_odd() {
            Complex64::new(0.0, 0.0)
        } else {
            symbol.eval(grid.xi(idx))
        }
    });
    out
}

/// Spectrum of the pointwise product, 2/3-rule dealiased.
pub fn convolve<T: Spectral>(f: &T, g: &T) -> Result<T> {
    f.grid().check_same(g.grid())?;
    let mut fd = f.clone();
    fd.dealias_in_place();
    let mut gd = g.clone();
    gd.dealias_in_place();
    let mut p = fd.to_physical();
    let q = gd.to_physical();
    p.iter_mut().zip(&q).for_each(|(a, b)| *a *= b);
    let mut out = T::from_physical(f.grid(), &p)?;
    out.dealias_in_place();
    Ok(out)
}

/// Reference O(N²) evaluation of `(1/(2πL)) Σ_m f_m g_{k−m}` over the retained band.
pub fn convolve_direct<T: Spectral>(f: &T, g: &T) -> Result<T> {
    let grid = *f.grid();
    grid.check_same(g.grid())?;
    let kc = grid.dealias_cutoff() as i64;
    let mu = grid.spectral_measure();
    let mut out = f.zeros_like();
    for row in 0..f.n_rows() {
        for k in -kc..=kc {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in -kc..=kc {
                let q = k - m;
                if q.abs() > kc {
                    continue;
                }
                let im = grid.index_of(m).unwrap();
                let iq = grid.index_of(q).unwrap();
                acc += f.coeff(im, row) * g.coeff(iq, row);
            }
            out.set_coeff(grid.index_of(k).unwrap(), row, acc * mu);
        }
    }
    Ok(out)
}

/// Dealiased physical samples, the building block of batched quadratic terms.
pub(crate) fn physical_dealiased<T: Spectral>(f: &T) -> Vec<f64> {
    let mut fd = f.clone();
    fd.dealias_in_place();
    fd.to_physical()
}

/// Dealiased spectrum of an assembled physical product.
pub(crate) fn spectrum_dealiased<T: Spectral>(grid: &Grid, phys: &[f64]) -> Result<T> {
    let mut out = T::from_physical(grid, phys)?;
    out.dealias_in_place();
    Ok(out)
}

/// Discrete ⟨f, g⟩ = (1/(2πL)) Σ_k f_k conj(g_k) for surface spectra.
pub fn inner_surface(f: &SurfaceSpectrum, g: &SurfaceSpectrum) -> Complex64 {
    let mu = f.grid().spectral_measure();
    f.data().iter().zip(g.data()).map(|(a, b)| a * b.conj()).sum::<Complex64>() * mu
}

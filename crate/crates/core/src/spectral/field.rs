use num_complex::Complex64;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use super::grid::Grid;
use crate::error::{Error, Result};

/// Fourier coefficients f_ξ(y_j), stored mode-major: `data[idx * n_y + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    data: Vec<Complex64>,
}

/// Fourier coefficients of a function of x alone.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSpectrum {
    grid: Grid,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![Complex64::new(0.0, 0.0); grid.n_modes() * grid.n_y()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        let expected = grid.n_modes() * grid.n_y();
        if data.len() != expected {
            return Err(Error::Dimension { expected, got: data.len() });
        }
        Ok(Self { grid, data })
    }

    /// Builds a field from `f(idx, ξ, y)`.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, f64, f64) -> Complex64) -> Self {
        let mut out = Self::zeros(grid);
        let ys = grid.y_nodes();
        for idx in 0..grid.n_modes() {
            let xi = grid.xi(idx);
            for (j, &y) in ys.iter().enumerate() {
                out.data[idx * grid.n_y() + j] = f(idx, xi, y);
            }
        }
        out
    }

    /// Profile-times-spectrum field `a_ξ p(ξ, y)`.
    pub fn from_profile(a: &SurfaceSpectrum, mut p: impl FnMut(f64, f64) -> f64) -> Self {
        let grid = *a.grid();
        Self::from_fn(grid, |idx, xi, y| a[idx] * p(xi, y))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn at(&self, idx: usize, j: usize) -> Complex64 {
        self.data[idx * self.grid.n_y() + j]
    }

    pub fn set(&mut self, idx: usize, j: usize, v: Complex64) {
        let n_y = self.grid.n_y();
        self.data[idx * n_y + j] = v;
    }

    pub fn column(&self, idx: usize) -> &[Complex64] {
        let n_y = self.grid.n_y();
        &self.data[idx * n_y..(idx + 1) * n_y]
    }

    pub fn column_mut(&mut self, idx: usize) -> &mut [Complex64] {
        let n_y = self.grid.n_y();
        &mut self.data[idx * n_y..(idx + 1) * n_y]
    }

    pub fn columns(&self) -> std::slice::ChunksExact<'_, Complex64> {
        self.data.chunks_exact(self.grid.n_y())
    }

    pub fn columns_mut(&mut self) -> std::slice::ChunksExactMut<'_, Complex64> {
        let n_y = self.grid.n_y();
        self.data.chunks_exact_mut(n_y)
    }

    /// Row j as a surface spectrum.
    pub fn row(&self, j: usize) -> SurfaceSpectrum {
        let n_y = self.grid.n_y();
        let data = (0..self.grid.n_modes()).map(|i| self.data[i * n_y + j]).collect();
        SurfaceSpectrum { grid: self.grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// max |f_{−ξ} − conj(f_ξ)| over all nodes.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.grid.n_modes() {
            let c = self.grid.conj_index(idx);
            for (a, b) in self.column(idx).iter().zip(self.column(c)) {
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Projects onto Hermitian-symmetric data by averaging conjugate pairs.
    pub fn symmetrize(&mut self) {
        let n = self.grid.n_modes();
        let n_y = self.grid.n_y();
        for idx in 0..=n / 2 {
            let c = self.grid.conj_index(idx);
            for j in 0..n_y {
                let a = self.data[idx * n_y + j];
                let b = self.data[c * n_y + j];
                let m = 0.5 * (a + b.conj());
                self.data[idx * n_y + j] = m;
                self.data[c * n_y + j] = m.conj();
            }
        }
    }

    /// Zeros every mode outside the 2/3 band.
    pub fn dealias(&mut self) {
        let grid = self.grid;
        for (idx, col) in self.columns_mut().enumerate() {
            if !grid.is_retained(idx) {
                col.fill(Complex64::new(0.0, 0.0));
            }
        }
    }

    /// Zeros the y = 0 and y = y_max rows.
    pub fn zero_boundary_rows(&mut self) {
        for col in self.columns_mut() {
            let last = col.len() - 1;
            col[0] = Complex64::new(0.0, 0.0);
            col[last] = Complex64::new(0.0, 0.0);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// self += s·other
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b * s);
    }

    /// Pointwise product with a real y-profile applied to every mode.
    pub fn mul_y_profile(&self, p: &[f64]) -> SpectralField {
        let mut out = self.clone();
        for col in out.columns_mut() {
            col.iter_mut().zip(p).for_each(|(z, &w)| *z *= w);
        }
        out
    }
}

impl SurfaceSpectrum {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, data: vec![Complex64::new(0.0, 0.0); grid.n_modes()] }
    }

    pub fn from_vec(grid: Grid, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.n_modes() {
            return Err(Error::Dimension { expected: grid.n_modes(), got: data.len() });
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: Grid, mut f: impl FnMut(usize, f64) -> Complex64) -> Self {
        let data = (0..grid.n_modes()).map(|i| f(i, grid.xi(i))).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn hermitian_defect(&self) -> f64 {
        (0..self.grid.n_modes())
            .map(|i| (self.data[i] - self.data[self.grid.conj_index(i)].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn symmetrize(&mut self) {
        let n = self.grid.n_modes();
        for idx in 0..=n / 2 {
            let c = self.grid.conj_index(idx);
            let m = 0.5 * (self.data[idx] + self.data[c].conj());
            self.data[idx] = m;
            self.data[c] = m.conj();
        }
    }

    pub fn dealias(&mut self) {
        let grid = self.grid;
        for (idx, z) in self.data.iter_mut().enumerate() {
            if !grid.is_retained(idx) {
                *z = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    pub fn axpy(&mut self, s: f64, other: &SurfaceSpectrum) {
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b * s);
    }

    /// Broadcast along y: f_ξ(y) = a_ξ for every node.
    pub fn broadcast(&self) -> SpectralField {
        SpectralField::from_fn(self.grid, |idx, _, _| self.data[idx])
    }

    /// Same coefficients viewed on a grid with another y-discretization.
    pub fn with_grid(&self, grid: Grid) -> Result<Self> {
        self.grid.check_same_modes(&grid)?;
        Ok(Self { grid, data: self.data.clone() })
    }
}

impl std::ops::Index<usize> for SurfaceSpectrum {
    type Output = Complex64;
    fn index(&self, i: usize) -> &Complex64 {
        &self.data[i]
    }
}

impl std::ops::IndexMut<usize> for SurfaceSpectrum {
    fn index_mut(&mut self, i: usize) -> &mut Complex64 {
        &mut self.data[i]
    }
}

macro_rules! impl_arith {
    ($ty:ident) => {
        impl Add for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                debug_assert_eq!(self.grid, rhs.grid);
                let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
                $ty { grid: self.grid, data }
            }
        }

        impl Sub for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                debug_assert_eq!(self.grid, rhs.grid);
                let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
                $ty { grid: self.grid, data }
            }
        }

        impl Mul<f64> for &$ty {
            type Output = $ty;
            fn mul(self, s: f64) -> $ty {
                $ty { grid: self.grid, data: self.data.iter().map(|a| a * s).collect() }
            }
        }

        impl Mul<Complex64> for &$ty {
            type Output = $ty;
            fn mul(self, s: Complex64) -> $ty {
                $ty { grid: self.grid, data: self.data.iter().map(|a| a * s).collect() }
            }
        }

        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ty { grid: self.grid, data: self.data.iter().map(|a| -a).collect() }
            }
        }

        impl AddAssign<&$ty> for $ty {
            fn add_assign(&mut self, rhs: &$ty) {
                debug_assert_eq!(self.grid, rhs.grid);
                self.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a += b);
            }
        }

        impl SubAssign<&$ty> for $ty {
            fn sub_assign(&mut self, rhs: &$ty) {
                debug_assert_eq!(self.grid, rhs.grid);
                self.data.iter_mut().zip(&rhs.data).for_each(|(a, b)| *a -= b);
            }
        }
    };
}

impl_arith!(SpectralField);
impl_arith!(SurfaceSpectrum);

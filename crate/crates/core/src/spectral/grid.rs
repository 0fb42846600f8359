use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Tensor grid: periodic x ∈ [−πL, πL) with `n_modes` Fourier modes, uniform y ∈ [0, y_max].
///
/// Spectral storage uses FFT ordering: index `i < n/2` is mode `k = i`, index `n/2` is the
/// Nyquist mode and indices above it are the negative modes `k = i − n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_modes: usize,
    lx: f64,
    n_y: usize,
    y_max: f64,
}

impl Grid {
    pub fn new(n_modes: usize, lx: f64, n_y: usize, y_max: f64) -> Result<Self> {
        if n_modes < 8 || !n_modes.is_power_of_two() {
            return Err(Error::config(format!(
                "n_modes must be a power of two >= 8, got {n_modes}"
            )));
        }
        if n_y < 16 {
            return Err(Error::config(format!("n_y must be >= 16, got {n_y}")));
        }
        if !(y_max >= 8.0) || !y_max.is_finite() {
            return Err(Error::config(format!("y_max must be >= 8, got {y_max}")));
        }
        if !(lx > 0.0) || !lx.is_finite() {
            return Err(Error::config(format!("L_x must be positive, got {lx}")));
        }
        Ok(Self { n_modes, lx, n_y, y_max })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn n_y(&self) -> usize {
        self.n_y
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn dy(&self) -> f64 {
        self.y_max / (self.n_y - 1) as f64
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI * self.lx / self.n_modes as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        if j + 1 == self.n_y {
            self.y_max
        } else {
            j as f64 * self.dy()
        }
    }

    pub fn y_nodes(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| self.y(j)).collect()
    }

    pub fn x(&self, i: usize) -> f64 {
        -PI * self.lx + i as f64 * self.dx()
    }

    pub fn x_nodes(&self) -> Vec<f64> {
        (0..self.n_modes).map(|i| self.x(i)).collect()
    }

    pub fn nyquist(&self) -> usize {
        self.n_modes / 2
    }

    /// Signed integer wavenumber of storage index `idx` (Nyquist reported as +n/2).
    pub fn mode_number(&self, idx: usize) -> i64 {
        if idx <= self.n_modes / 2 {
            idx as i64
        } else {
            idx as i64 - self.n_modes as i64
        }
    }

    /// ξ_k = k/L.
    pub fn xi(&self, idx: usize) -> f64 {
        self.mode_number(idx) as f64 / self.lx
    }

    pub fn conj_index(&self, idx: usize) -> usize {
        (self.n_modes - idx) % self.n_modes
    }

    /// Largest |k| kept by the 2/3 rule.
    pub fn dealias_cutoff(&self) -> usize {
        self.n_modes.div_ceil(3) - 1
    }

    pub fn is_retained(&self, idx: usize) -> bool {
        self.mode_number(idx).unsigned_abs() as usize <= self.dealias_cutoff()
    }

    /// Storage index of signed wavenumber `k`, if representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let n = self.n_modes as i64;
        if k > -n / 2 && k <= n / 2 {
            Some(k.rem_euclid(n) as usize)
        } else {
            None
        }
    }

    /// Weight of one mode in the spectral measure dξ/(2π).
    pub fn spectral_measure(&self) -> f64 {
        1.0 / (2.0 * PI * self.lx)
    }

    /// Trapezoid weight of y-node `j`.
    pub fn trap_weight(&self, j: usize) -> f64 {
        if j == 0 || j + 1 == self.n_y {
            0.5 * self.dy()
        } else {
            self.dy()
        }
    }

    pub fn trap_weights(&self) -> Vec<f64> {
        (0..self.n_y).map(|j| self.trap_weight(j)).collect()
    }

    pub fn same_shape(&self, other: &Grid) -> bool {
        self == other
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }

    /// Same x-discretization, possibly different y-grid.
    pub(crate) fn check_same_modes(&self, other: &Grid) -> Result<()> {
        if self.n_modes == other.n_modes && self.lx == other.lx {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "modes {}/{} vs {}/{}",
                self.n_modes, self.lx, other.n_modes, other.lx
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(4, 1.0, 32, 12.0).is_err());
        assert!(Grid::new(12, 1.0, 32, 12.0).is_err());
        assert!(Grid::new(16, 1.0, 8, 12.0).is_err());
        assert!(Grid::new(16, 1.0, 32, 4.0).is_err());
        assert!(Grid::new(16, 0.0, 32, 12.0).is_err());
    }

    #[test]
    fn modes_pair_up() {
        let g = Grid::new(16, 2.0, 16, 8.0).unwrap();
        assert_eq!(g.mode_number(0), 0);
        assert_eq!(g.mode_number(15), -1);
        assert_eq!(g.conj_index(3), 13);
        assert_eq!(g.conj_index(0), 0);
        assert_eq!(g.index_of(-3), Some(13));
        assert_eq!(g.xi(1), 0.5);
        let zeros = (0..16).filter(|&i| g.mode_number(i) == 0).count();
        assert_eq!(zeros, 1);
    }

    #[test]
    fn y_nodes_hit_endpoints() {
        let g = Grid::new(8, 1.0, 17, 8.0).unwrap();
        assert_eq!(g.y(0), 0.0);
        assert_eq!(g.y(16), 8.0);
        assert!((g.dy() - 0.5).abs() < 1e-15);
        let total: f64 = g.trap_weights().iter().sum();
        assert!((total - 8.0).abs() < 1e-14);
    }

    #[test]
    fn dealias_cutoff_satisfies_two_thirds_rule() {
        for n in [8usize, 16, 32, 64, 512] {
            let g = Grid::new(n, 1.0, 16, 8.0).unwrap();
            let k = g.dealias_cutoff();
            assert!(3 * k < n, "{n}");
            assert!(3 * (k + 1) >= n, "{n}");
        }
    }
}

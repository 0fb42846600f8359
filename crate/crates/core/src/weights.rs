//! Gaussian weight ρ, the frequency-dependent lift θ_ξ, the cutoff χ and checks of the
//! weighted inequalities they satisfy.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::ycalc::{ddy_col, trapz_col};

/// ⟨ξ⟩ = (1 + ξ²)^{1/2}.
#[inline]
pub fn bracket(xi: f64) -> f64 {
    (1.0 + xi * xi).sqrt()
}

/// Time-dependent context of the weight and the lift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub t: f64,
    pub eps: f64,
}

impl WeightParams {
    pub fn new(t: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::config(format!("epsilon must be positive, got {eps}")));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::config(format!("time must be nonnegative, got {t}")));
        }
        Ok(Self { t, eps })
    }

    /// Checks the restrictions of a certified run: ε ≤ 1/64 and t ≤ ε.
    pub fn check_certified(&self) -> Result<()> {
        if self.eps > 1.0 / 64.0 {
            return Err(Error::config(format!("certified runs need eps <= 1/64, got {}", self.eps)));
        }
        if self.t > self.eps {
            return Err(Error::config(format!("certified runs need t <= eps, got t = {}", self.t)));
        }
        Ok(())
    }

    /// s = 1 + t/ε.
    #[inline]
    pub fn s(&self) -> f64 {
        1.0 + self.t / self.eps
    }

    pub fn rho(&self, y: f64) -> f64 {
        rho(y, self.t, self.eps)
    }

    /// ∂t log ρ.
    pub fn dlogrho_dt(&self, y: f64) -> f64 {
        let s = self.s();
        -y * y / (8.0 * self.eps * s * s)
    }

    #[inline]
    fn a(&self, xi: f64) -> f64 {
        (1.0 + xi * xi) / (2.0 * self.s())
    }

    /// 1 − θ_ξ = e^{−a y²}.
    pub fn one_minus_theta(&self, xi: f64, y: f64) -> f64 {
        (-self.a(xi) * y * y).exp()
    }

    pub fn theta(&self, xi: f64, y: f64) -> f64 {
        -(-self.a(xi) * y * y).exp_m1()
    }

    pub fn dtheta_dy(&self, xi: f64, y: f64) -> f64 {
        let a = self.a(xi);
        2.0 * a * y * (-a * y * y).exp()
    }

    pub fn d2theta_dy2(&self, xi: f64, y: f64) -> f64 {
        let a = self.a(xi);
        (2.0 * a - 4.0 * a * a * y * y) * (-a * y * y).exp()
    }

    pub fn d3theta_dy3(&self, xi: f64, y: f64) -> f64 {
        let a = self.a(xi);
        let y2 = y * y;
        (8.0 * a * a * a * y2 * y - 12.0 * a * a * y) * (-a * y2).exp()
    }

    pub fn dtheta_dt(&self, xi: f64, y: f64) -> f64 {
        let a = self.a(xi);
        -y * y * a * (-a * y * y).exp() / (self.s() * self.eps)
    }

    /// ∂t∂yθ_ξ.
    pub fn d2theta_dtdy(&self, xi: f64, y: f64) -> f64 {
        let a = self.a(xi);
        let g = (-a * y * y).exp();
        -2.0 * a * y * g * (1.0 - a * y * y) / (self.s() * self.eps)
    }

    pub fn c_theta(&self, xi: f64) -> f64 {
        c_theta(xi, self.t, self.eps)
    }
}

/// ρ = exp(y²/(8(1+t/ε))).
pub fn rho(y: f64, t: f64, eps: f64) -> f64 {
    (y * y / (8.0 * (1.0 + t / eps))).exp()
}

pub fn theta(xi: f64, y: f64, t: f64, eps: f64) -> f64 {
    WeightParams { t, eps }.theta(xi, y)
}

/// c_θ,ξ = I_∞[1 − θ_ξ] = √(2π(1+t/ε)) / (2⟨ξ⟩).
pub fn c_theta(xi: f64, t: f64, eps: f64) -> f64 {
    (2.0 * PI * (1.0 + t / eps)).sqrt() / (2.0 * bracket(xi))
}

/// ‖ρ⁻¹‖_{L²(0,∞)} = (π(1+t/ε))^{1/4}.
pub fn rho_inv_l2(t: f64, eps: f64) -> f64 {
    (PI * (1.0 + t / eps)).powf(0.25)
}

const CHI_START: f64 = 1.0;
const CHI_WIDTH: f64 = 5.0;

/// Cutoff: 0 on [0,1], 1 on [6,∞), quintic smoothstep in between.
pub fn chi(y: f64) -> f64 {
    let u = ((y - CHI_START) / CHI_WIDTH).clamp(0.0, 1.0);
    u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
}

pub fn chi_prime(y: f64) -> f64 {
    let u = (y - CHI_START) / CHI_WIDTH;
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    30.0 * u * u * (1.0 - u) * (1.0 - u) / CHI_WIDTH
}

pub fn chi_second(y: f64) -> f64 {
    let u = (y - CHI_START) / CHI_WIDTH;
    if !(0.0..=1.0).contains(&u) {
        return 0.0;
    }
    60.0 * u * (1.0 - u) * (1.0 - 2.0 * u) / (CHI_WIDTH * CHI_WIDTH)
}

/// Both sides of the weighted Hardy inequality.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Evaluates ‖ρf‖² + ‖yρf‖²/(4(1+t/ε)) against 4(1+t/ε)‖ρ∂yf‖² on a uniform grid.
pub fn hardy_check(f: &[f64], dy: f64, t: f64, eps: f64) -> HardyReport {
    let n = f.len();
    let s = 1.0 + t / eps;
    let mut df = vec![0.0; n];
    ddy_col(f, dy, &mut df);
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut c = vec![0.0; n];
    for j in 0..n {
        let y = j as f64 * dy;
        let r2 = rho(y, t, eps).powi(2);
        a[j] = r2 * f[j] * f[j];
        b[j] = y * y * a[j];
        c[j] = r2 * df[j] * df[j];
    }
    let lhs = trapz_col(&a, dy) + trapz_col(&b, dy) / (4.0 * s);
    let rhs = 4.0 * s * trapz_col(&c, dy);
    HardyReport { lhs, rhs, satisfied: lhs <= rhs * (1.0 + 1e-8) }
}

/// Fitted constants of the three lift bounds at one frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftBoundsReport {
    pub xi: f64,
    /// ‖(1−θ_ξ)ρ‖ · ⟨ξ⟩^{1/2}
    pub k_theta_rho: f64,
    /// ε ‖ρ∂tθ_ξ‖ · ⟨ξ⟩^{1/2}
    pub k_dt_theta: f64,
    /// ‖yρ²∂yyθ_ξ‖ / ⟨ξ⟩^{1/2}
    pub k_dyy_theta: f64,
}

/// Quadrature of the lift bounds on [0, y_max] with `n_y` nodes.
pub fn lift_bounds_check(xi: f64, t: f64, eps: f64, n_y: usize, y_max: f64) -> LiftBoundsReport {
    let w = WeightParams { t, eps };
    let dy = y_max / (n_y - 1) as f64;
    let mut p = vec![0.0; n_y];
    let mut q = vec![0.0; n_y];
    let mut r = vec![0.0; n_y];
    for j in 0..n_y {
        let y = j as f64 * dy;
        let rh = w.rho(y);
        p[j] = (w.one_minus_theta(xi, y) * rh).powi(2);
        q[j] = (w.dtheta_dt(xi, y) * rh).powi(2);
        r[j] = (y * rh * rh * w.d2theta_dy2(xi, y)).powi(2);
    }
    let br = bracket(xi).sqrt();
    LiftBoundsReport {
        xi,
        k_theta_rho: trapz_col(&p, dy).sqrt() * br,
        k_dt_theta: eps * trapz_col(&q, dy).sqrt() * br,
        k_dyy_theta: trapz_col(&r, dy).sqrt() / br,
    }
}

/// Lift bounds over a frequency sweep, with the max/min spread of each fitted constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftSweep {
    pub reports: Vec<LiftBoundsReport>,
    pub spread: [f64; 3],
    pub drift_flagged: bool,
}

pub fn lift_bounds_sweep(xis: &[f64], t: f64, eps: f64, n_y: usize, y_max: f64, tolerance: f64) -> LiftSweep {
    let reports: Vec<_> = xis.iter().map(|&xi| lift_bounds_check(xi, t, eps, n_y, y_max)).collect();
    let spread_of = |get: fn(&LiftBoundsReport) -> f64| {
        let (lo, hi) = reports
            .iter()
            .map(get)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), v| (lo.min(v), hi.max(v)));
        hi / lo
    };
    let spread = [
        spread_of(|r| r.k_theta_rho),
        spread_of(|r| r.k_dt_theta),
        spread_of(|r| r.k_dyy_theta),
    ];
    let drift_flagged = spread.iter().any(|&s| s > 1.0 + tolerance);
    LiftSweep { reports, spread, drift_flagged }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const EPS: f64 = 1.0 / 64.0;

    #[test]
    fn rho_values() {
        assert_eq!(rho(0.0, 0.3, 0.01), 1.0);
        assert_relative_eq!(rho(2.0, 0.0, EPS), 0.5f64.exp(), max_relative = 1e-15);
    }

    #[test]
    fn log_rho_time_derivative_matches_differences() {
        let w = WeightParams::new(0.004, EPS).unwrap();
        let h = 1e-7;
        for y in [0.5, 2.0, 7.0] {
            let fd = (rho(y, w.t + h, EPS).ln() - rho(y, w.t - h, EPS).ln()) / (2.0 * h);
            assert_relative_eq!(w.dlogrho_dt(y), fd, max_relative = 1e-8);
        }
    }

    #[test]
    fn theta_derivatives_match_differences() {
        let w = WeightParams::new(0.003, EPS).unwrap();
        let h = 1e-5;
        for xi in [0.0, 0.7, 3.0] {
            for y in [0.2, 0.9, 1.7] {
                let fy = |f: &dyn Fn(f64) -> f64| (f(y + h) - f(y - h)) / (2.0 * h);
                let d1 = fy(&|yy| w.theta(xi, yy));
                assert_relative_eq!(w.dtheta_dy(xi, y), d1, max_relative = 1e-8, epsilon = 1e-9);
                let d2 = fy(&|yy| w.dtheta_dy(xi, yy));
                assert_relative_eq!(w.d2theta_dy2(xi, y), d2, max_relative = 1e-8, epsilon = 1e-9);
                let d3 = fy(&|yy| w.d2theta_dy2(xi, yy));
                assert_relative_eq!(w.d3theta_dy3(xi, y), d3, max_relative = 1e-7, epsilon = 1e-8);
                let ht = 1e-6;
                let at = |t: f64| WeightParams { t, eps: EPS };
                let dt = (at(w.t + ht).theta(xi, y) - at(w.t - ht).theta(xi, y)) / (2.0 * ht);
                assert_relative_eq!(w.dtheta_dt(xi, y), dt, max_relative = 1e-6);
                let dty = (at(w.t + ht).dtheta_dy(xi, y) - at(w.t - ht).dtheta_dy(xi, y)) / (2.0 * ht);
                assert_relative_eq!(w.d2theta_dtdy(xi, y), dty, max_relative = 1e-6, epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn theta_range_and_monotonicity() {
        let w = WeightParams::new(0.01, EPS).unwrap();
        for xi in [0.0, 0.5, 4.0] {
            assert_eq!(w.theta(xi, 0.0), 0.0);
            let mut prev = 0.0;
            for j in 0..200 {
                let th = w.theta(xi, j as f64 * 0.06);
                assert!((0.0..=1.0).contains(&th));
                assert!(th >= prev);
                prev = th;
            }
            assert!(1.0 - w.theta(xi, 12.0) < (-72.0f64 / w.s()).exp() + 1e-300);
        }
    }

    #[test]
    fn initial_lift_independent_of_eps() {
        for xi in [0.0, 1.0, 5.0] {
            assert_eq!(theta(xi, 1.3, 0.0, 1e-3), theta(xi, 1.3, 0.0, 0.5));
        }
    }

    #[test]
    fn weight_choice_bound() {
        let w = WeightParams::new(0.007, EPS).unwrap();
        for xi in [0.0, 1.0, 3.0] {
            for j in 0..100 {
                let y = j as f64 * 0.12;
                let lhs = w.one_minus_theta(xi, y) * w.rho(y);
                let rhs = (-3.0 * y * y * (1.0 + xi * xi) / (8.0 * w.s())).exp();
                assert!(lhs <= rhs * (1.0 + 1e-14));
            }
        }
    }

    #[test]
    fn c_theta_closed_form_matches_quadrature() {
        let n = 2048;
        let dy = 12.0 / (n - 1) as f64;
        let w = WeightParams::new(0.0, EPS).unwrap();
        let col: Vec<f64> = (0..n).map(|j| w.one_minus_theta(1.0, j as f64 * dy)).collect();
        assert!((trapz_col(&col, dy) - c_theta(1.0, 0.0, EPS)).abs() < 1e-6);
        assert_relative_eq!(c_theta(0.0, 0.0, EPS), (2.0 * PI).sqrt() / 2.0, max_relative = 1e-15);
        let base = c_theta(0.0, 0.002, EPS);
        for xi in [0.5, 2.0, 9.0] {
            assert_relative_eq!(c_theta(xi, 0.002, EPS) * bracket(xi), base, max_relative = 1e-14);
        }
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(0.5), 0.0);
        assert_eq!(chi(7.0), 1.0);
        let mut worst: f64 = 0.0;
        for j in 0..=7000 {
            let y = j as f64 * 1e-3;
            let p = chi_prime(y);
            assert!((0.0..=1.0).contains(&p));
            worst = worst.max(p);
        }
        assert_relative_eq!(worst, 0.375, max_relative = 1e-6);
        let h = 1e-3;
        for y0 in [1.0, 6.0] {
            let left = (chi(y0) - 2.0 * chi(y0 - h) + chi(y0 - 2.0 * h)) / (h * h);
            let right = (chi(y0 + 2.0 * h) - 2.0 * chi(y0 + h) + chi(y0)) / (h * h);
            assert!((left - right).abs() < 10.0 * h, "{y0}: {left} {right}");
        }
        let fd = (chi_prime(3.0 + 1e-6) - chi_prime(3.0 - 1e-6)) / 2e-6;
        assert_relative_eq!(chi_second(3.0), fd, max_relative = 1e-6);
    }

    #[test]
    fn hardy_on_simple_profiles() {
        let n = 1025;
        let dy = 12.0 / (n - 1) as f64;
        let zero = vec![0.0; n];
        let r = hardy_check(&zero, dy, 0.0, EPS);
        assert_eq!((r.lhs, r.rhs, r.satisfied), (0.0, 0.0, true));
        let f: Vec<f64> = (0..n).map(|j| {
            let y = j as f64 * dy;
            y * (-y * y).exp()
        }).collect();
        let r = hardy_check(&f, dy, 0.0, EPS);
        assert!(r.satisfied && r.lhs > 0.0);
    }

    #[test]
    fn lift_constants_are_uniform() {
        let r0 = lift_bounds_check(0.0, 0.0, EPS, 2048, 12.0);
        assert!(r0.k_theta_rho.is_finite() && r0.k_dt_theta.is_finite() && r0.k_dyy_theta.is_finite());
        let sweep = lift_bounds_sweep(&[1.0, 2.0, 4.0, 8.0, 16.0], 0.0, EPS, 4096, 12.0, 0.1);
        assert!(sweep.spread[0] < 1.1, "{:?}", sweep.spread);
        let at = |eps: f64| lift_bounds_check(2.0, eps, eps, 4096, 12.0).k_dt_theta;
        assert_relative_eq!(at(1.0 / 64.0), at(1.0 / 128.0), max_relative = 1e-10);
    }

    #[test]
    fn iy_sup_bounded_by_weighted_norm() {
        let n = 2048;
        let dy = 12.0 / (n - 1) as f64;
        let (t, eps) = (0.005, EPS);
        let f: Vec<f64> = (0..n).map(|j| {
            let y = j as f64 * dy;
            (2.0 * y).cos() * (-0.4 * y * y).exp()
        }).collect();
        let mut iy = vec![0.0; n];
        crate::spectral::ycalc::cumtrapz_col(&f, dy, &mut iy);
        let sup = iy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let wf: Vec<f64> = f.iter().enumerate().map(|(j, v)| (rho(j as f64 * dy, t, eps) * v).powi(2)).collect();
        assert!(sup <= rho_inv_l2(t, eps) * trapz_col(&wf, dy).sqrt());
    }
}

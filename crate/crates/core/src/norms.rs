//! Analytic norms, total energy, the radius ODE and the parameter selector.
//!
//! Squared norms use the discrete measure (1/(2πL)) per mode and trapezoid weights in y.
//! Per-mode contributions are accumulated as logarithms so that e^{2τ|ξ|} and ρ² never
//! overflow on their own.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::deck::DeckState;
use crate::error::{Error, Result};
use crate::spectral::{d2dy2, ddy, Grid, SpectralField, SurfaceSpectrum};
use crate::weights::{bracket, chi, WeightParams};

/// Extra mode weight inside a squared norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeWeight {
    One,
    /// |ξ|, i.e. the norm of |∂x|^{1/2} f
    AbsXi,
    /// ⟨ξ⟩, i.e. the norm of ⟨∂x⟩^{1/2} f
    Bracket,
}

impl ModeWeight {
    fn ln(self, xi: f64) -> f64 {
        match self {
            ModeWeight::One => 0.0,
            ModeWeight::AbsXi => xi.abs().ln(),
            ModeWeight::Bracket => bracket(xi).ln(),
        }
    }
}

/// Value of a norm together with its spectral tail diagnostic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub value: f64,
    /// Share of the squared norm carried by the top third of the retained band.
    pub top_fraction: f64,
    pub under_resolved: bool,
}

pub const TOP_THIRD_LIMIT: f64 = 0.01;

fn in_top_third(grid: &Grid, idx: usize) -> bool {
    let k = grid.mode_number(idx).unsigned_abs() as f64;
    k > 2.0 * grid.dealias_cutoff() as f64 / 3.0
}

fn combine(grid: &Grid, logs: &[Option<f64>]) -> NormReport {
    let max = logs.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return NormReport { value: 0.0, top_fraction: 0.0, under_resolved: false };
    }
    let (mut total, mut top) = (0.0, 0.0);
    for (idx, l) in logs.iter().enumerate() {
        if let Some(l) = l {
            let v = (l - max).exp();
            total += v;
            if in_top_third(grid, idx) {
                top += v;
            }
        }
    }
    let top_fraction = top / total;
    NormReport { value: (0.5 * (max + total.ln())).exp(), top_fraction, under_resolved: top_fraction > TOP_THIRD_LIMIT }
}

fn ln_mode_factor(grid: &Grid, idx: usize, tau: f64, r: f64, mw: ModeWeight) -> f64 {
    let xi = grid.xi(idx);
    grid.spectral_measure().ln() + 2.0 * tau * xi.abs() + r * (1.0 + xi * xi).ln() + mw.ln(xi)
}

/// ‖f‖_{τ,r} with an optional |ξ| or ⟨ξ⟩ weight, plus the resolution diagnostic.
pub fn norm_tau_r_report(f: &SpectralField, tau: f64, r: f64, w: &WeightParams, mw: ModeWeight) -> NormReport {
    let grid = f.grid();
    let s = w.s();
    let ln_rho2: Vec<f64> = grid.y_nodes().iter().map(|y| y * y / (4.0 * s)).collect();
    let trap = grid.trap_weights();
    let logs: Vec<Option<f64>> = f
        .columns()
        .enumerate()
        .map(|(idx, col)| {
            if mw == ModeWeight::AbsXi && grid.mode_number(idx) == 0 {
                return None;
            }
            let terms: Vec<f64> = col
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|(j, z)| trap[j].ln() + ln_rho2[j] + 2.0 * z.norm().ln())
                .collect();
            let m = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if m == f64::NEG_INFINITY {
                return None;
            }
            let sum: f64 = terms.iter().map(|l| (l - m).exp()).sum();
            Some(m + sum.ln() + ln_mode_factor(grid, idx, tau, r, mw))
        })
        .collect();
    combine(grid, &logs)
}

pub fn norm_tau_r(f: &SpectralField, tau: f64, r: f64, w: &WeightParams) -> f64 {
    norm_tau_r_report(f, tau, r, w, ModeWeight::One).value
}

pub fn norm_tilde_report(g: &SurfaceSpectrum, tau: f64, r: f64, mw: ModeWeight) -> NormReport {
    let grid = g.grid();
    let logs: Vec<Option<f64>> = g
        .data()
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            if z.norm() == 0.0 || (mw == ModeWeight::AbsXi && grid.mode_number(idx) == 0) {
                None
            } else {
                Some(2.0 * z.norm().ln() + ln_mode_factor(grid, idx, tau, r, mw))
            }
        })
        .collect();
    combine(grid, &logs)
}

pub fn norm_tilde(g: &SurfaceSpectrum, tau: f64, r: f64) -> f64 {
    norm_tilde_report(g, tau, r, ModeWeight::One).value
}

/// Per-mode weight μ e^{2τ|ξ|}⟨ξ⟩^{2r}.
pub fn mode_weights(grid: &Grid, tau: f64, r: f64) -> Vec<f64> {
    (0..grid.n_modes()).map(|idx| ln_mode_factor(grid, idx, tau, r, ModeWeight::One).exp()).collect()
}

/// ⟨f, g⟩_{τ,r}.
pub fn inner_tau_r(f: &SpectralField, g: &SpectralField, tau: f64, r: f64, w: &WeightParams) -> Complex64 {
    let grid = f.grid();
    let rho2: Vec<f64> = grid.y_nodes().iter().map(|&y| w.rho(y).powi(2)).collect();
    let trap = grid.trap_weights();
    let mw = mode_weights(grid, tau, r);
    f.columns()
        .zip(g.columns())
        .zip(&mw)
        .map(|((a, b), &m)| {
            let s: Complex64 = a.iter().zip(b).enumerate().map(|(j, (x, y))| x * y.conj() * (trap[j] * rho2[j])).sum();
            s * m
        })
        .sum()
}

/// ⟨f, g⟩ with the tilde weight.
pub fn inner_tilde(f: &SurfaceSpectrum, g: &SurfaceSpectrum, tau: f64, r: f64) -> Complex64 {
    let mw = mode_weights(f.grid(), tau, r);
    f.data().iter().zip(g.data()).zip(&mw).map(|((a, b), &m)| a * b.conj() * m).sum()
}

/// τ, r and δ of the composite norms; ε is carried by the state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub tau: f64,
    pub r: f64,
    pub delta: f64,
}

impl NormParams {
    pub fn new(tau: f64, r: f64, delta: f64) -> Result<Self> {
        if !(r > 2.0) {
            return Err(Error::config(format!("r must exceed 2, got {r}")));
        }
        if !(delta > 1.0) {
            return Err(Error::config(format!("delta must exceed 1, got {delta}")));
        }
        if !(tau >= 0.0) {
            return Err(Error::config(format!("tau must be nonnegative, got {tau}")));
        }
        Ok(Self { tau, r, delta })
    }
}

/// The ten unscaled constituents of X, Y, Z, H.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Constituents {
    pub w: f64,
    pub chi_dy_w: f64,
    pub a: f64,
    pub w_half: f64,
    pub chi_dy_w_half: f64,
    pub a_half: f64,
    pub dy_w: f64,
    pub chi_dyy_w: f64,
    pub y_w: f64,
    pub y_chi_dy_w: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Composite {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
    pub parts: Constituents,
    pub under_resolved: bool,
}

/// Fields entering the composite norms.
pub struct NormFields {
    pub dy_w: SpectralField,
    pub chi_dy_w: SpectralField,
    pub chi_dyy_w: SpectralField,
    pub y_w: SpectralField,
    pub y_chi_dy_w: SpectralField,
}

impl NormFields {
    pub fn new(wbar: &SpectralField) -> Self {
        let ys = wbar.grid().y_nodes();
        let chis: Vec<f64> = ys.iter().map(|&y| chi(y)).collect();
        let ychi: Vec<f64> = ys.iter().zip(&chis).map(|(y, c)| y * c).collect();
        let dy_w = ddy(wbar);
        Self {
            chi_dy_w: dy_w.mul_y_profile(&chis),
            chi_dyy_w: d2dy2(wbar).mul_y_profile(&chis),
            y_w: wbar.mul_y_profile(&ys),
            y_chi_dy_w: dy_w.mul_y_profile(&ychi),
            dy_w,
        }
    }
}

pub fn composite_norms(state: &DeckState, params: &NormParams) -> Composite {
    let w = state.weights();
    let (tau, r) = (params.tau, params.r);
    let f = NormFields::new(&state.wbar);
    let mut flagged = false;
    let mut n = |field: &SpectralField, rr: f64, mw: ModeWeight| {
        let rep = norm_tau_r_report(field, tau, rr, &w, mw);
        flagged |= rep.under_resolved;
        rep.value
    };
    let lag = r - 0.5;
    let parts = Constituents {
        w: n(&state.wbar, r, ModeWeight::One),
        chi_dy_w: n(&f.chi_dy_w, lag, ModeWeight::One),
        a: 0.0,
        w_half: n(&state.wbar, r, ModeWeight::AbsXi),
        chi_dy_w_half: n(&f.chi_dy_w, lag, ModeWeight::AbsXi),
        a_half: 0.0,
        dy_w: n(&f.dy_w, r, ModeWeight::One),
        chi_dyy_w: n(&f.chi_dyy_w, lag, ModeWeight::One),
        y_w: n(&f.y_w, r, ModeWeight::One),
        y_chi_dy_w: n(&f.y_chi_dy_w, lag, ModeWeight::One),
    };
    let ra = norm_tilde_report(&state.a, tau, r, ModeWeight::One);
    let rah = norm_tilde_report(&state.a, tau, r, ModeWeight::AbsXi);
    let parts = Constituents { a: ra.value, a_half: rah.value, ..parts };
    let d = 1.0 / params.delta;
    Composite {
        x: parts.w + d * parts.chi_dy_w + parts.a,
        y: parts.w_half + d * parts.chi_dy_w_half + parts.a_half,
        z: parts.dy_w + d * parts.chi_dyy_w,
        h: parts.y_w + d * parts.y_chi_dy_w,
        parts,
        under_resolved: flagged || ra.under_resolved || rah.under_resolved,
    }
}

/// One time sample of the composite norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub h: f64,
}

/// E(T) = sup X² + ∫Y² + (1/16)∫Z² + (1/(64ε))∫H², trapezoid in time over the samples.
pub fn total_energy(samples: &[EnergySample], eps: f64) -> f64 {
    let sup = samples.iter().map(|s| s.x * s.x).fold(0.0, f64::max);
    let integrand = |s: &EnergySample| s.y * s.y + s.z * s.z / 16.0 + s.h * s.h / (64.0 * eps);
    let integral: f64 = samples.windows(2).map(|p| 0.5 * (p[1].t - p[0].t) * (integrand(&p[0]) + integrand(&p[1]))).sum();
    sup + integral
}

/// Running E over a growing sample window, one value per sample.
pub fn energy_series(samples: &[EnergySample], eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let (mut sup, mut integral) = (0.0f64, 0.0);
    let integrand = |s: &EnergySample| s.y * s.y + s.z * s.z / 16.0 + s.h * s.h / (64.0 * eps);
    for (i, s) in samples.iter().enumerate() {
        sup = sup.max(s.x * s.x);
        if i > 0 {
            let p = &samples[i - 1];
            integral += 0.5 * (s.t - p.t) * (integrand(p) + integrand(s));
        }
        out.push(sup + integral);
    }
    out
}

/// Constants of the energy estimates; no sharp values are known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Constants {
    pub c0: f64,
    pub c0_tilde: f64,
    pub c1: f64,
    pub c2: f64,
    pub c1_tilde: f64,
}

impl Default for Constants {
    fn default() -> Self {
        Self { c0: 1.0, c0_tilde: 1.0, c1: 1.0, c2: 1.0, c1_tilde: 1.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub gamma1: f64,
    pub gamma2: f64,
}

pub fn gammas(x: f64, z: f64, h: f64, eps: f64, delta: f64, c1: f64, c2: f64) -> Gammas {
    let common = 1.0 / eps + z / 4.0 + x + delta * h;
    Gammas { gamma1: c1 * (h * h + common), gamma2: c2 * common }
}

/// Forward Euler step of τ̇ = −Γ₁ − 1.
pub fn advance_tau(tau: f64, gamma1: f64, dt: f64) -> Result<f64> {
    let next = tau - dt * (gamma1 + 1.0);
    if next <= 0.0 || !next.is_finite() {
        return Err(Error::RadiusExhausted { tau: next });
    }
    Ok(next)
}

/// Output of the parameter selector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub delta: f64,
    pub eps: f64,
    pub t_star: f64,
}

/// The four time-step conditions on T*, each as `lhs ≤ rhs`.
pub fn t_star_conditions(t: f64, e0: f64, tau0: f64, delta: f64, eps: f64, c: &Constants) -> [(f64, f64); 4] {
    let (q, h) = (t.powf(0.25), t.sqrt());
    [
        (q * c.c2 * (1.0 + delta) * (h / eps + 1.0), 1.0),
        (h * c.c1 * (1.0 + delta) * (h + 1.0) * (1.5 * e0).sqrt(), tau0 / 8.0),
        (t, tau0 / 4.0),
        (q * (1.0 + e0.powf(0.25)), 1.0 / 16.0),
    ]
}

pub const MIN_T_STAR: f64 = 1e-12;

/// δ first, then ε, then T* by bisection.
/// δ with C̃₀δ⁻² = 1/16 − 1/100.
pub fn selector_delta(c: &Constants) -> f64 {
    (c.c0_tilde / (1.0 / 16.0 - 1.0 / 100.0)).sqrt()
}

/// ε = min(1/64, τ₀/(12C₁E₀)); 1/64 for vanishing data.
pub fn selector_eps(e0: f64, tau0: f64, c: &Constants) -> f64 {
    (1.0 / 64.0f64).min(tau0 / (12.0 * c.c1 * e0))
}

pub fn select_parameters(e0: f64, tau0: f64, c: &Constants) -> Result<Selection> {
    if !(e0 > 0.0 && tau0 > 0.0) {
        return Err(Error::config(format!("need E0 > 0 and tau0 > 0, got {e0}, {tau0}")));
    }
    let delta = selector_delta(c);
    let eps = selector_eps(e0, tau0, c);
    let ok = |t: f64| t <= eps && t_star_conditions(t, e0, tau0, delta, eps, c).iter().all(|(l, r)| l <= r);
    if !ok(MIN_T_STAR) {
        return Err(Error::Infeasible(format!("no T* above {MIN_T_STAR} (E0 = {e0}, tau0 = {tau0})")));
    }
    let (mut lo, mut hi) = (MIN_T_STAR, eps);
    if ok(hi) {
        lo = hi;
    }
    while hi - lo > 1e-14 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Selection { delta, eps, t_star: lo })
}

/// E₀ = ‖(w̄, A)‖²_{X} at radius 10τ₀; rejects data that under-resolves that radius.
pub fn initial_energy(state: &DeckState, tau0: f64, r: f64, delta: f64) -> Result<f64> {
    let c = composite_norms(state, &NormParams::new(10.0 * tau0, r, delta)?);
    if c.under_resolved {
        return Err(Error::config("initial data under-resolves the radius 10*tau0"));
    }
    Ok(c.x * c.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{inverse_transform, forward_transform};
    use std::f64::consts::PI;

    fn wp() -> WeightParams {
        WeightParams::new(0.004, 1.0 / 64.0).unwrap()
    }

    #[test]
    fn zero_field_norms_vanish() {
        let g = Grid::new(16, 1.0, 64, 10.0).unwrap();
        assert_eq!(norm_tau_r(&SpectralField::zeros(g), 0.3, 2.5, &wp()), 0.0);
        assert_eq!(norm_tilde(&SurfaceSpectrum::zeros(g), 0.3, 2.5), 0.0);
        let s = DeckState::zeros(g, 0.0, 1.0 / 64.0);
        let c = composite_norms(&s, &NormParams::new(0.1, 2.5, 4.0).unwrap());
        assert_eq!((c.x, c.y, c.z, c.h), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn single_mode_matches_closed_form_quadrature() {
        let (tau, r): (f64, f64) = (0.7, 2.5);
        let w = wp();
        let g = Grid::new(16, 1.0, 4096, 12.0).unwrap();
        let idx = g.index_of(1).unwrap();
        let f = SpectralField::from_fn(g, |i, _, y| if i == idx { Complex64::new((-y * y).exp(), 0.0) } else { Complex64::default() });
        // ∫₀^∞ e^{y²/(4s)} e^{−2y²} dy
        let quad = 0.5 * (PI / (2.0 - 1.0 / (4.0 * w.s()))).sqrt();
        let expected = tau.exp() * 2f64.powf(r / 2.0) * (g.spectral_measure() * quad).sqrt();
        let got = norm_tau_r(&f, tau, r, &w);
        assert!((got / expected - 1.0).abs() < 1e-8, "{got} {expected}");
    }

    #[test]
    fn tilde_single_mode_and_plancherel() {
        let g = Grid::new(32, 1.0, 16, 8.0).unwrap();
        let (tau, r, a): (f64, f64, f64) = (0.3, 2.5, 0.7);
        let mut s = SurfaceSpectrum::zeros(g);
        s[g.index_of(2).unwrap()] = Complex64::new(a, 0.0);
        let expected = a * (2.0 * tau).exp() * 5f64.powf(r / 2.0) * g.spectral_measure().sqrt();
        assert!((norm_tilde(&s, tau, r) / expected - 1.0).abs() < 1e-13);

        let samples: Vec<f64> = g.x_nodes().iter().map(|&x| (x).cos() + 0.3 * (3.0 * x).sin() - 0.2).collect();
        let spec: SurfaceSpectrum = forward_transform(&g, &samples).unwrap();
        let phys: f64 = samples.iter().map(|v| v * v).sum::<f64>() * g.dx();
        assert!((norm_tilde(&spec, 0.0, 0.0).powi(2) - phys).abs() < 1e-10 * phys);
        let back = inverse_transform(&spec);
        assert!(back.iter().zip(&samples).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn huge_radius_stays_finite() {
        let g = Grid::new(64, 1.0, 32, 8.0).unwrap();
        let mut s = SurfaceSpectrum::zeros(g);
        s[g.index_of(20).unwrap()] = Complex64::new(1e-200, 0.0);
        let n = norm_tilde(&s, 30.0, 2.5);
        let expected = (-200.0 * 10f64.ln() + 600.0 + 1.25 * 401f64.ln() + 0.5 * g.spectral_measure().ln()).exp();
        assert!(n.is_finite() && (n / expected - 1.0).abs() < 1e-10);
    }

    #[test]
    fn top_third_flag() {
        let g = Grid::new(64, 1.0, 32, 8.0).unwrap();
        let mut s = SurfaceSpectrum::zeros(g);
        s[g.index_of(1).unwrap()] = Complex64::new(1.0, 0.0);
        assert!(!norm_tilde_report(&s, 0.0, 2.5, ModeWeight::One).under_resolved);
        s[g.index_of(20).unwrap()] = Complex64::new(1e-3, 0.0);
        let rep = norm_tilde_report(&s, 0.5, 2.5, ModeWeight::One);
        assert!(rep.under_resolved && rep.top_fraction > 0.5);
    }

    #[test]
    fn a_only_state() {
        let g = Grid::new(16, 1.0, 64, 10.0).unwrap();
        let mut s = DeckState::zeros(g, 0.0, 1.0 / 64.0);
        s.a[1] = Complex64::new(0.2, 0.1);
        s.a[15] = Complex64::new(0.2, -0.1);
        let p = NormParams::new(0.1, 2.5, 4.0).unwrap();
        let c = composite_norms(&s, &p);
        assert_eq!(c.x, norm_tilde(&s.a, 0.1, 2.5));
        assert_eq!((c.z, c.h), (0.0, 0.0));
        let expected_y = 2f64.sqrt() * 0.05f64.sqrt() * (0.1f64).exp() * 2f64.powf(1.25) * g.spectral_measure().sqrt();
        assert!((c.y / expected_y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constituents_match_quadrature() {
        // one mode with profile p(y) = y e^{-y²}; every constituent is a 1D quadrature
        let (tau, r, delta) = (0.2, 2.5, 4.0);
        let g = Grid::new(16, 1.0, 8193, 12.0).unwrap();
        let w = WeightParams::new(0.0, 1.0 / 64.0).unwrap();
        let idx = g.index_of(1).unwrap();
        let p = |y: f64| y * (-y * y).exp();
        let dp = |y: f64| (1.0 - 2.0 * y * y) * (-y * y).exp();
        let ddp = |y: f64| (4.0 * y * y * y - 6.0 * y) * (-y * y).exp();
        let s = DeckState::new(
            SpectralField::from_fn(g, |i, _, y| if i == idx { Complex64::new(p(y), 0.0) } else { Complex64::default() }),
            SurfaceSpectrum::zeros(g),
            0.0,
            1.0 / 64.0,
        )
        .unwrap();
        let c = composite_norms(&s, &NormParams::new(tau, r, delta).unwrap());
        // fine Simpson quadrature of ρ² q(y)² on [0, 12]
        let quad = |q: &dyn Fn(f64) -> f64| {
            let n = 20000;
            let h = 12.0 / n as f64;
            (0..=n)
                .map(|k| {
                    let y = k as f64 * h;
                    let wk = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                    wk * w.rho(y).powi(2) * q(y).powi(2)
                })
                .sum::<f64>()
                * h
                / 3.0
        };
        let m = |rr: f64, extra: f64| (g.spectral_measure() * (2.0 * tau).exp() * 2f64.powf(rr) * extra).sqrt();
        let checks = [
            (c.parts.w, m(r, 1.0) * quad(&p).sqrt()),
            (c.parts.w_half, m(r, 1.0) * quad(&p).sqrt()),
            (c.parts.chi_dy_w, m(r - 0.5, 1.0) * quad(&|y| chi(y) * dp(y)).sqrt()),
            (c.parts.dy_w, m(r, 1.0) * quad(&dp).sqrt()),
            (c.parts.chi_dyy_w, m(r - 0.5, 1.0) * quad(&|y| chi(y) * ddp(y)).sqrt()),
            (c.parts.y_w, m(r, 1.0) * quad(&|y| y * p(y)).sqrt()),
            (c.parts.y_chi_dy_w, m(r - 0.5, 1.0) * quad(&|y| y * chi(y) * dp(y)).sqrt()),
        ];
        for (i, (got, want)) in checks.iter().enumerate() {
            assert!((got / want - 1.0).abs() < 1e-5, "{i}: {got} {want}");
        }
    }

    #[test]
    fn energy_closed_forms() {
        let one = [EnergySample { t: 0.0, x: 0.3, y: 1.0, z: 2.0, h: 3.0 }];
        assert_eq!(total_energy(&one, 0.1), 0.09);
        let eps = 1.0 / 64.0;
        let flat: Vec<EnergySample> = (0..11).map(|k| EnergySample { t: 0.1 * k as f64, x: 0.5, y: 0.2, z: 0.4, h: 0.1 }).collect();
        let expected = 0.25 + 1.0 * (0.04 + 0.16 / 16.0 + 0.01 / (64.0 * eps));
        assert!((total_energy(&flat, eps) - expected).abs() < 1e-14);
        let series = energy_series(&flat, eps);
        assert!((series[10] - expected).abs() < 1e-14);
        assert!(series.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn energy_quadrature_is_second_order() {
        let eps = 0.5;
        let sample = |n: usize| -> f64 {
            let v: Vec<EnergySample> = (0..=n)
                .map(|k| {
                    let t = k as f64 / n as f64;
                    EnergySample { t, x: 0.0, y: t.cos(), z: 0.0, h: 0.0 }
                })
                .collect();
            total_energy(&v, eps)
        };
        let exact = 0.5 + (2.0f64).sin() / 4.0;
        let (e1, e2) = ((sample(20) - exact).abs(), (sample(40) - exact).abs());
        assert!(((e1 / e2).log2() - 2.0).abs() < 0.05);
    }

    #[test]
    fn gamma_examples() {
        let eps = 1.0 / 64.0;
        let z = gammas(0.0, 0.0, 0.0, eps, 5.0, 1.0, 1.0);
        assert_eq!((z.gamma1, z.gamma2), (64.0, 64.0));
        let g = gammas(1.0, 2.0, 3.0, eps, 5.0, 1.0, 1.0);
        assert_eq!(g.gamma2, 80.5);
        assert_eq!(g.gamma1, 9.0 + 80.5);
        assert_eq!(gammas(1.0, 2.0, 3.0, eps, 5.0, 2.0, 1.0).gamma1, 2.0 * g.gamma1);
    }

    #[test]
    fn tau_ode() {
        assert_eq!(advance_tau(1.0, 0.0, 0.25).unwrap(), 0.75);
        assert!(matches!(advance_tau(0.1, 10.0, 0.01), Err(Error::RadiusExhausted { .. })));
    }

    #[test]
    fn selector_examples() {
        let c = Constants::default();
        let s = select_parameters(1.0, 1.0, &c).unwrap();
        assert!((s.delta - (1600.0f64 / 84.0).sqrt()).abs() < 1e-12);
        assert_eq!(s.eps, 1.0 / 64.0);
        // the last condition binds: T^{1/4}·2 ≤ 1/16
        assert!((s.t_star / (1.0f64 / 32.0).powi(4) - 1.0).abs() < 1e-9);
        let conds = t_star_conditions(s.t_star, 1.0, 1.0, s.delta, s.eps, &c);
        assert!(conds.iter().all(|(l, r)| l <= r));
        let beyond = t_star_conditions(s.t_star * (1.0 + 1e-9), 1.0, 1.0, s.delta, s.eps, &c);
        assert!(beyond.iter().any(|(l, r)| l > r));
        assert!(select_parameters(1e30, 1.0, &c).is_err());
    }

    #[test]
    fn selector_eps_branch() {
        let s = select_parameters(10.0, 0.5, &Constants::default()).unwrap();
        assert!((s.eps - 0.5 / 120.0).abs() < 1e-15);
        // choice (a) holds with equality
        assert!((1.5 * s.eps * 10.0 - 0.5 / 8.0).abs() < 1e-15);
    }
}

//! Blasius base flow and leading-order three-deck reconstruction from a lower-deck state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::deck::DeckState;
use crate::error::{Error, Result};
use crate::spectral::{
    apply_multiplier, integrate_y, inverse_transform, Grid, SpectralField, SurfaceSpectrum, Symbol,
};

/// Solution of f‴ + f f″ = 0, f(0) = f′(0) = 0, f′(∞) = 1 on a uniform η grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlasiusProfile {
    pub eta: Vec<f64>,
    pub f: Vec<f64>,
    pub fp: Vec<f64>,
    pub fpp: Vec<f64>,
    /// shooting parameter f″(0)
    pub fpp0: f64,
    pub h: f64,
}

const BLASIUS_BRACKET: (f64, f64) = (0.4, 0.5);
pub const BLASIUS_STEP: f64 = 1e-2;

fn blasius_rhs(s: [f64; 3]) -> [f64; 3] {
    [s[1], s[2], -s[0] * s[2]]
}

fn rk4_step(s: [f64; 3], h: f64) -> [f64; 3] {
    let add = |a: [f64; 3], b: [f64; 3], c: f64| [a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]];
    let k1 = blasius_rhs(s);
    let k2 = blasius_rhs(add(s, k1, h / 2.0));
    let k3 = blasius_rhs(add(s, k2, h / 2.0));
    let k4 = blasius_rhs(add(s, k3, h));
    let mut out = s;
    for i in 0..3 {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

fn integrate(fpp0: f64, eta_max: f64, h: f64, keep: bool) -> (Vec<[f64; 3]>, [f64; 3]) {
    let n = (eta_max / h).round() as usize;
    let h = eta_max / n as f64;
    let mut s = [0.0, 0.0, fpp0];
    let mut path = Vec::with_capacity(if keep { n + 1 } else { 0 });
    if keep {
        path.push(s);
    }
    for _ in 0..n {
        s = rk4_step(s, h);
        if keep {
            path.push(s);
        }
    }
    (path, s)
}

/// Shooting on f″(0) by bisection, RK4 with step `h`.
pub fn blasius_solve_with(eta_max: f64, tol: f64, h: f64) -> Result<BlasiusProfile> {
    if !(eta_max >= 10.0) || !(h > 0.0) || !(tol > 0.0) {
        return Err(Error::config(format!("blasius needs eta_max >= 10, h > 0, tol > 0 (got {eta_max}, {h}, {tol})")));
    }
    let miss = |s: f64| integrate(s, eta_max, h, false).1[1] - 1.0;
    let (mut lo, mut hi) = BLASIUS_BRACKET;
    let (mlo, mhi) = (miss(lo), miss(hi));
    if !(mlo < 0.0 && mhi > 0.0) {
        return Err(Error::config(format!("blasius bracket [{lo}, {hi}] does not straddle f'(eta_max) = 1")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if miss(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fpp0 = 0.5 * (lo + hi);
    let (path, end) = integrate(fpp0, eta_max, h, true);
    if (end[1] - 1.0).abs() > tol {
        return Err(Error::config(format!("blasius shooting missed: f'(eta_max) - 1 = {:.3e}", end[1] - 1.0)));
    }
    let n = path.len() - 1;
    let step = eta_max / n as f64;
    let profile = BlasiusProfile {
        eta: (0..=n).map(|i| i as f64 * step).collect(),
        f: path.iter().map(|s| s[0]).collect(),
        fp: path.iter().map(|s| s[1]).collect(),
        fpp: path.iter().map(|s| s[2]).collect(),
        fpp0,
        h: step,
    };
    let growth = profile.f[n] / eta_max;
    let expect = 1.0 - profile.displacement() / eta_max;
    if (growth - expect).abs() > 1e-6 || !(growth > 0.5) {
        return Err(Error::config(format!("blasius far field is not linear: f/eta = {growth}")));
    }
    Ok(profile)
}

pub fn blasius_solve(eta_max: f64, tol: f64) -> Result<BlasiusProfile> {
    blasius_solve_with(eta_max, tol, BLASIUS_STEP)
}

impl BlasiusProfile {
    pub fn eta_max(&self) -> f64 {
        *self.eta.last().unwrap()
    }

    /// η − f at the far end
    pub fn displacement(&self) -> f64 {
        self.eta_max() - self.f[self.f.len() - 1]
    }

    /// Cubic Hermite samples of (f′, f″) at η.
    fn eval(&self, eta: f64) -> (f64, f64) {
        if eta >= self.eta_max() {
            return (1.0, 0.0);
        }
        let eta = eta.max(0.0);
        let i = ((eta / self.h) as usize).min(self.eta.len() - 2);
        let (h, u) = (self.h, (eta - self.eta[i]) / self.h);
        let f3 = |k: usize| -self.f[k] * self.fpp[k];
        let herm = |p0: f64, p1: f64, d0: f64, d1: f64| -> (f64, f64) {
            let (u2, u3) = (u * u, u * u * u);
            let v = (2.0 * u3 - 3.0 * u2 + 1.0) * p0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * p1 + (u3 - u2) * h * d1;
            let dv = ((6.0 * u2 - 6.0 * u) * p0 + (3.0 * u2 - 4.0 * u + 1.0) * h * d0 + (-6.0 * u2 + 6.0 * u) * p1 + (3.0 * u2 - 2.0 * u) * h * d1) / h;
            (v, dv)
        };
        let (fp, _) = herm(self.fp[i], self.fp[i + 1], self.fpp[i], self.fpp[i + 1]);
        let (fpp, _) = herm(self.fpp[i], self.fpp[i + 1], f3(i), f3(i + 1));
        (fp, fpp)
    }

    /// U_B(Ȳ) = f′(Ȳ/f″(0)), normalized so that U_B′(0) = 1.
    pub fn u_b(&self, ybar: f64) -> f64 {
        self.eval(ybar / self.fpp0).0
    }

    pub fn u_b_prime(&self, ybar: f64) -> f64 {
        self.eval(ybar / self.fpp0).1 / self.fpp0
    }

    /// Ȳ at the far end of the computed profile.
    pub fn ybar_edge(&self) -> f64 {
        self.eta_max() * self.fpp0
    }
}

/// P = |∂x|A.
pub fn pressure_from_displacement(a: &SurfaceSpectrum) -> SurfaceSpectrum {
    apply_multiplier(a, Symbol::AbsXi)
}

/// The five stretched variables at a given ν.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scalings {
    pub nu: f64,
}

impl Scalings {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 0.0 && nu < 1.0) {
            return Err(Error::config(format!("nu must lie in (0, 1), got {nu}")));
        }
        Ok(Self { nu })
    }

    pub fn x(&self, big_x: f64) -> f64 {
        1.0 + self.nu.powf(0.375) * big_x
    }

    pub fn y_main(&self, ybar: f64) -> f64 {
        self.nu.sqrt() * ybar
    }

    pub fn y_lower(&self, y: f64) -> f64 {
        self.nu.powf(0.625) * y
    }

    pub fn y_upper(&self, ytilde: f64) -> f64 {
        self.nu.powf(0.375) * ytilde
    }

    pub fn t(&self, big_t: f64) -> f64 {
        self.nu.powf(0.25) * big_t
    }

    /// Ȳ of the lower-deck height Y.
    pub fn ybar_of_lower(&self, y: f64) -> f64 {
        self.nu.powf(0.125) * y
    }
}

/// (u, v, p) on one deck, physical rows `[j][i]` over the x nodes and the deck's own vertical nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckFields {
    pub vertical: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    pub n_main: usize,
    pub n_upper: usize,
    pub ytilde_max: f64,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { n_main: 128, n_upper: 128, ytilde_max: 8.0 }
    }
}

/// Leading-order fields of the main (u₁,v₁,p₁), lower (U,V,P) and upper (u₂,v₂,p₂) decks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeckComposite {
    pub scalings: Scalings,
    pub big_t: f64,
    pub big_x: Vec<f64>,
    /// A(X) at the nodes
    pub displacement: Vec<f64>,
    pub main: DeckFields,
    pub lower: DeckFields,
    pub upper: DeckFields,
    pub cauchy_riemann_residual: f64,
}

fn surface_rows(grid: &Grid, rows: &[SurfaceSpectrum]) -> Vec<f64> {
    let n = grid.n_modes();
    let mut out = vec![0.0; n * rows.len()];
    out.par_chunks_mut(n).zip(rows.par_iter()).for_each(|(dst, s)| dst.copy_from_slice(&inverse_transform(s)));
    out
}

fn broadcast_rows(line: &[f64], rows: &[f64], mut f: impl FnMut(f64, f64) -> f64) -> Vec<f64> {
    rows.iter().flat_map(|&r| line.iter().map(move |&v| (v, r)).collect::<Vec<_>>()).map(|(v, r)| f(v, r)).collect()
}

/// Upper-deck pair from its wall traces, by decay e^{−|ξ|Ỹ}.
fn upper_spectra(a: &SurfaceSpectrum, ytilde: f64) -> (SurfaceSpectrum, SurfaceSpectrum) {
    let g = *a.grid();
    let decay = SurfaceSpectrum::from_fn(g, |idx, xi| a.data()[idx] * (-xi.abs() * ytilde).exp());
    let v2 = apply_multiplier(&decay, Symbol::IXi);
    let mut v2n = v2.clone();
    v2n.scale(-1.0);
    (v2n, pressure_from_displacement(&decay))
}

/// Max over Ỹ nodes of |∂X v₂ + ∂Ỹ p₂| and |∂X p₂ − ∂Ỹ v₂|, relative to the largest trace coefficient.
fn cauchy_riemann(a: &SurfaceSpectrum, nodes: &[f64]) -> f64 {
    let g = *a.grid();
    let scale = pressure_from_displacement(a).max_abs().max(apply_multiplier(a, Symbol::IXi).max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    nodes
        .iter()
        .map(|&yt| {
            let (v2, p2) = upper_spectra(a, yt);
            let dxv = apply_multiplier(&v2, Symbol::IXi);
            let dxp = apply_multiplier(&p2, Symbol::IXi);
            let dyp = SurfaceSpectrum::from_fn(g, |idx, xi| -xi.abs() * p2.data()[idx]);
            let dyv = SurfaceSpectrum::from_fn(g, |idx, xi| -xi.abs() * v2.data()[idx]);
            let r1 = dxv.data().iter().zip(dyp.data()).map(|(a, b)| (a + b).norm()).fold(0.0, f64::max);
            let r2 = dxp.data().iter().zip(dyv.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            r1.max(r2)
        })
        .fold(0.0, f64::max)
        / scale
}

/// Three-deck fields from a lower-deck snapshot at viscosity ν.
pub fn reconstruct(lower: &DeckState, blasius: &BlasiusProfile, nu: f64) -> Result<DeckComposite> {
    reconstruct_with(lower, blasius, nu, ReconstructOptions::default())
}

pub fn reconstruct_with(
    lower: &DeckState,
    blasius: &BlasiusProfile,
    nu: f64,
    opts: ReconstructOptions,
) -> Result<DeckComposite> {
    let scalings = Scalings::new(nu)?;
    if opts.n_main < 2 || opts.n_upper < 2 || !(opts.ytilde_max > 0.0) {
        return Err(Error::config("reconstruction grids need at least two nodes and a positive extent"));
    }
    let grid = *lower.grid();
    let a = &lower.a;
    let w = lower.weights();
    let p = pressure_from_displacement(a);
    let dxa = apply_multiplier(a, Symbol::IXi);
    let (a_x, p_x, dxa_x) = (inverse_transform(a), inverse_transform(&p), inverse_transform(&dxa));

    // main deck
    let ybar_max = blasius.ybar_edge();
    let ybar: Vec<f64> = (0..opts.n_main).map(|j| ybar_max * j as f64 / (opts.n_main - 1) as f64).collect();
    let main = DeckFields {
        u: broadcast_rows(&a_x, &ybar, |a, yb| a * blasius.u_b_prime(yb)),
        v: broadcast_rows(&dxa_x, &ybar, |d, yb| -d * blasius.u_b(yb)),
        p: broadcast_rows(&p_x, &ybar, |p, _| p),
        vertical: ybar,
    };

    // lower deck: U = Y + θA + w̄, V = −∂X ∫₀^Y (θA + w̄)
    let ys = grid.y_nodes();
    let perturb = &SpectralField::from_fn(grid, |idx, xi, y| w.theta(xi, y) * a.data()[idx]) + &lower.wbar;
    let big_v = apply_multiplier(&integrate_y(&perturb), Symbol::IXi);
    let mut u_lower = inverse_transform(&perturb);
    let n = grid.n_modes();
    for (j, row) in u_lower.chunks_mut(n).enumerate() {
        row.iter_mut().for_each(|u| *u += ys[j]);
        if j == 0 {
            row.iter_mut().for_each(|u| *u = 0.0);
        }
    }
    let mut v_lower: Vec<f64> = inverse_transform(&big_v).into_iter().map(|v| -v).collect();
    v_lower[..n].iter_mut().for_each(|v| *v = 0.0);
    let lower_fields = DeckFields { u: u_lower, v: v_lower, p: broadcast_rows(&p_x, &ys, |p, _| p), vertical: ys };

    // upper deck: u₂ = −p₂
    let yt: Vec<f64> = (0..opts.n_upper).map(|j| opts.ytilde_max * j as f64 / (opts.n_upper - 1) as f64).collect();
    let pairs: Vec<(SurfaceSpectrum, SurfaceSpectrum)> = yt.par_iter().map(|&y| upper_spectra(a, y)).collect();
    let v2: Vec<SurfaceSpectrum> = pairs.iter().map(|p| p.0.clone()).collect();
    let p2: Vec<SurfaceSpectrum> = pairs.into_iter().map(|p| p.1).collect();
    let p2_x = surface_rows(&grid, &p2);
    let upper = DeckFields {
        u: p2_x.iter().map(|p| -p).collect(),
        v: surface_rows(&grid, &v2),
        p: p2_x,
        vertical: yt.clone(),
    };
    let cr = cauchy_riemann(a, &yt);

    Ok(DeckComposite {
        scalings,
        big_t: lower.t,
        big_x: grid.x_nodes(),
        displacement: a_x,
        main,
        lower: lower_fields,
        upper,
        cauchy_riemann_residual: cr,
    })
}

impl DeckComposite {
    fn n_x(&self) -> usize {
        self.big_x.len()
    }

    /// Physical (x, y, u, v, p) samples of every deck, leading order only.
    pub fn physical_csv(&self, blasius: &BlasiusProfile) -> String {
        let s = self.scalings;
        let nu = s.nu;
        let mut out = String::from("deck,x,y,u,v,p\n");
        let n = self.n_x();
        let mut emit = |name: &str, f: &DeckFields, y_of: &dyn Fn(f64) -> f64, uvp: &dyn Fn(f64, f64, f64, f64) -> (f64, f64, f64)| {
            for (j, &yv) in f.vertical.iter().enumerate() {
                for i in 0..n {
                    let k = j * n + i;
                    let (u, v, p) = uvp(yv, f.u[k], f.v[k], f.p[k]);
                    let _ = writeln!(out, "{name},{:.17e},{:.17e},{u:.17e},{v:.17e},{p:.17e}", s.x(self.big_x[i]), y_of(yv));
                }
            }
        };
        emit("main", &self.main, &|yb| s.y_main(yb), &|yb, u, v, p| {
            (blasius.u_b(yb) + nu.powf(0.125) * u, nu.powf(0.25) * v, nu.powf(0.25) * p)
        });
        emit("lower", &self.lower, &|y| s.y_lower(y), &|_, u, v, p| {
            (nu.powf(0.125) * u, nu.powf(0.375) * v, nu.powf(0.25) * p)
        });
        emit("upper", &self.upper, &|yt| s.y_upper(yt), &|_, u, v, p| {
            (1.0 + nu.powf(0.25) * u, nu.powf(0.25) * v, nu.powf(0.25) * p)
        });
        out
    }

    /// Lower-deck row index of the first node at or above Y.
    fn lower_row(&self, y: f64) -> usize {
        self.lower.vertical.iter().position(|&v| v >= y).unwrap_or(self.lower.vertical.len() - 1)
    }

    /// sup_X |ν^{1/8}U(X, Y_m) − u_M(X, Ȳ = ν^{1/8}Y_m)| in physical velocity units.
    pub fn matching_error(&self, blasius: &BlasiusProfile, y_match: f64) -> f64 {
        let nu = self.scalings.nu;
        let j = self.lower_row(y_match);
        let y = self.lower.vertical[j];
        let ybar = self.scalings.ybar_of_lower(y);
        let n = self.n_x();
        let (ub, ubp) = (blasius.u_b(ybar), blasius.u_b_prime(ybar));
        (0..n)
            .map(|i| {
                let lower = nu.powf(0.125) * self.lower.u[j * n + i];
                let main = ub + nu.powf(0.125) * self.displacement[i] * ubp;
                (lower - main).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Largest |U| or |V| on the wall row.
    pub fn lower_no_slip_defect(&self) -> f64 {
        let n = self.n_x();
        self.lower.u[..n].iter().chain(&self.lower.v[..n]).map(|v| v.abs()).fold(0.0, f64::max)
    }
}

/// Least-squares slope of ln(err) against ln(ν).
pub fn log_log_slope(nus: &[f64], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = nus.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|v| v.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn blasius_wall_shear() {
        let b = blasius_solve(10.0, 1e-8).unwrap();
        assert!((b.fpp0 - 0.4696).abs() < 1e-4, "{}", b.fpp0);
        assert!(b.fp.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!((b.f[0], b.fp[0]), (0.0, 0.0));
        assert!((b.fp.last().unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn blasius_integrators_and_truncation_agree() {
        let coarse = blasius_solve_with(10.0, 1e-8, 0.02).unwrap();
        let fine = blasius_solve_with(10.0, 1e-8, 0.01).unwrap();
        assert!((coarse.fpp0 - fine.fpp0).abs() < 1e-6);
        let long = blasius_solve_with(20.0, 1e-8, 0.01).unwrap();
        assert!((long.fpp0 - fine.fpp0).abs() < 1e-8, "{}", (long.fpp0 - fine.fpp0).abs());
    }

    #[test]
    fn blasius_rejects_short_domain() {
        assert!(blasius_solve(5.0, 1e-8).is_err());
    }

    #[test]
    fn normalized_profile_has_unit_wall_slope() {
        let b = blasius_solve(10.0, 1e-8).unwrap();
        assert!((b.u_b_prime(0.0) - 1.0).abs() < 1e-12);
        assert_eq!(b.u_b(0.0), 0.0);
        // near-wall expansion U_B = Ȳ − Ȳ⁴/(24 f″(0)²) + …
        let yb: f64 = 0.05;
        let expect = yb - yb.powi(4) / (24.0 * b.fpp0 * b.fpp0);
        assert!((b.u_b(yb) - expect).abs() < 1e-8);
        assert_eq!(b.u_b(1e3), 1.0);
    }

    #[test]
    fn pressure_of_cosine_and_constant() {
        let g = Grid::new(32, 1.0, 16, 8.0).unwrap();
        let k = 3.0;
        let samples: Vec<f64> = g.x_nodes().iter().map(|x| (k * x).cos()).collect();
        let a: SurfaceSpectrum = crate::spectral::forward_transform(&g, &samples).unwrap();
        let p = inverse_transform(&pressure_from_displacement(&a));
        for (pv, av) in p.iter().zip(&samples) {
            assert!((pv - k * av).abs() < 1e-12);
        }
        let c: SurfaceSpectrum = crate::spectral::forward_transform(&g, &vec![2.0; 32]).unwrap();
        assert!(pressure_from_displacement(&c).max_abs() == 0.0);
    }

    #[test]
    fn pressure_matches_principal_value_quadrature() {
        // (1/2πL) p.v.∫ A′(x̄) cot((x − x̄)/2L) dx̄ on a staggered fine grid
        let g = Grid::new(64, 2.0, 16, 8.0).unwrap();
        let lx = g.lx();
        let a_fn = |x: f64| (-(x * x) / 2.0).exp() + 0.3 * (x / lx).sin();
        let da_fn = |x: f64| -x * (-(x * x) / 2.0).exp() + 0.3 / lx * (x / lx).cos();
        let samples: Vec<f64> = g.x_nodes().iter().map(|&x| a_fn(x)).collect();
        let a: SurfaceSpectrum = crate::spectral::forward_transform(&g, &samples).unwrap();
        let p = inverse_transform(&pressure_from_displacement(&a));
        let m = 4000;
        let h = 2.0 * PI * lx / m as f64;
        for (i, &x) in g.x_nodes().iter().enumerate().step_by(7) {
            let pv: f64 = (0..m)
                .map(|q| {
                    let xb = x + (q as f64 + 0.5) * h;
                    let wrapped = (xb + PI * lx).rem_euclid(2.0 * PI * lx) - PI * lx;
                    da_fn(wrapped) / ((x - xb) / (2.0 * lx)).tan()
                })
                .sum::<f64>()
                * h
                / (2.0 * PI * lx);
            assert!((pv - p[i]).abs() < 1e-4, "{pv} vs {}", p[i]);
        }
    }

    fn sample_state(g: Grid, amp: f64) -> DeckState {
        let mut s = DeckState::zeros(g, 0.0, 1.0 / 64.0);
        for (k, c) in [(1i64, Complex64::new(0.5, 0.2)), (2, Complex64::new(-0.1, 0.3))] {
            let (i, m) = (g.index_of(k).unwrap(), g.index_of(-k).unwrap());
            s.a[i] = c * amp;
            s.a[m] = c.conj() * amp;
            for j in 1..g.n_y() - 1 {
                let y = g.y(j);
                let v = c * amp * y * (-y * y).exp();
                s.wbar.set(i, j, v);
                s.wbar.set(m, j, v.conj());
            }
        }
        s
    }

    #[test]
    fn quiescent_lower_deck_reduces_to_base_flows() {
        let g = Grid::new(16, 2.0, 33, 8.0).unwrap();
        let b = blasius_solve(10.0, 1e-8).unwrap();
        let c = reconstruct(&DeckState::zeros(g, 0.0, 1.0 / 64.0), &b, 1e-3).unwrap();
        assert!(c.main.u.iter().chain(&c.main.v).chain(&c.upper.p).all(|v| *v == 0.0));
        let n = 16;
        for (j, &y) in c.lower.vertical.iter().enumerate() {
            assert!(c.lower.u[j * n..(j + 1) * n].iter().all(|u| (u - y).abs() < 1e-14));
        }
        assert_eq!(c.cauchy_riemann_residual, 0.0);
    }

    #[test]
    fn composite_invariants() {
        let g = Grid::new(32, 2.0, 65, 10.0).unwrap();
        let b = blasius_solve(10.0, 1e-8).unwrap();
        let c = reconstruct(&sample_state(g, 1.0), &b, 1e-3).unwrap();
        assert!(c.cauchy_riemann_residual < 1e-8, "{}", c.cauchy_riemann_residual);
        assert_eq!(c.lower_no_slip_defect(), 0.0);
        // U − Y → A at the top of the lower deck
        let n = 32;
        let top = g.n_y() - 1;
        let a_x = inverse_transform(&sample_state(g, 1.0).a);
        for i in 0..n {
            assert!((c.lower.u[top * n + i] - g.y_max() - a_x[i]).abs() < 1e-10);
        }
        // upper-deck wall traces
        let p_x = inverse_transform(&pressure_from_displacement(&sample_state(g, 1.0).a));
        let top_main = c.main.vertical.len() - 1;
        for i in 0..n {
            assert!((c.upper.p[i] - p_x[i]).abs() < 1e-14);
            // v₂(X, 0) cancels the main-deck normal velocity at its edge
            assert!((c.upper.v[i] - c.main.v[top_main * n + i]).abs() < 1e-12);
        }
        assert!(reconstruct(&sample_state(g, 1.0), &b, 1.5).is_err());
    }

    #[test]
    fn matching_error_scales_with_eighth_power() {
        let g = Grid::new(32, 2.0, 129, 10.0).unwrap();
        let b = blasius_solve(10.0, 1e-8).unwrap();
        let s = sample_state(g, 10.0);
        let nus = [1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = nus.iter().map(|&nu| reconstruct(&s, &b, nu).unwrap().matching_error(&b, 0.5)).collect();
        let slope = log_log_slope(&nus, &errs);
        assert!((slope - 0.125).abs() < 0.15, "{slope} {errs:?}");
    }

    #[test]
    fn slope_of_exact_power_law() {
        let nus = [1e-2, 1e-3, 1e-4];
        let errs: Vec<f64> = nus.iter().map(|n: &f64| 3.0 * n.powf(0.3)).collect();
        assert!((log_log_slope(&nus, &errs) - 0.3).abs() < 1e-12);
    }
}

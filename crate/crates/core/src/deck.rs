//! Homogenized lower-deck equation for w̄ and its coupling terms.
//!
//! ∂t w̄_ξ = ∂yy w̄_ξ − iξ y w̄_ξ − N_ξ − L_ξ − M_ξ − B_ξ,   v̄_ξ = −iξ I_y[w̄_ξ].
//!
//! Every quadratic term is the transform of a physical product of dealiased factors. The
//! factors that involve the lift are the mode-wise fields A_ξθ_ξ(y), A_ξ∂yθ_ξ(y) and
//! −iξA_ξI_y[θ_ξ](y), so the partner-frequency dependence of θ is carried by the factor
//! itself. A direct O(N²·n_y) mode sum of the same expressions is kept as the reference.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bo::{bo_nonlinear, bo_rhs};
use crate::error::{Error, Result};
use crate::spectral::ycalc::cumtrapz_col;
use crate::spectral::{
    apply_multiplier, d2dy2, ddy, integrate_y, integrate_y_full, physical_dealiased, spectrum_dealiased,
    CompactLaplacian, Grid, SpectralField, SurfaceSpectrum, Symbol,
};
use crate::weights::WeightParams;

/// Lower-deck state (w̄, A) at time t with weight parameter ε.
#[derive(Clone, Debug, PartialEq)]
pub struct DeckState {
    pub wbar: SpectralField,
    pub a: SurfaceSpectrum,
    pub t: f64,
    pub eps: f64,
}

impl DeckState {
    pub fn new(wbar: SpectralField, a: SurfaceSpectrum, t: f64, eps: f64) -> Result<Self> {
        wbar.grid().check_same(a.grid())?;
        WeightParams::new(t, eps)?;
        Ok(Self { wbar, a, t, eps })
    }

    pub fn zeros(grid: Grid, t: f64, eps: f64) -> Self {
        Self { wbar: SpectralField::zeros(grid), a: SurfaceSpectrum::zeros(grid), t, eps }
    }

    pub fn grid(&self) -> &Grid {
        self.wbar.grid()
    }

    pub fn weights(&self) -> WeightParams {
        WeightParams { t: self.t, eps: self.eps }
    }

    /// Largest violation of the Dirichlet rows and of Hermitian symmetry.
    pub fn invariant_defect(&self) -> f64 {
        let dirichlet = self
            .wbar
            .columns()
            .map(|c| c[0].norm().max(c[c.len() - 1].norm()))
            .fold(0.0, f64::max);
        dirichlet.max(self.wbar.hermitian_defect()).max(self.a.hermitian_defect())
    }

    pub fn is_finite(&self) -> bool {
        self.wbar.is_finite() && self.a.is_finite()
    }
}

/// θ_ξ and its derivatives tabulated for every mode, `[idx * n_y + j]`.
#[derive(Clone, Debug)]
pub struct LiftBank {
    pub theta: Vec<f64>,
    pub one_minus: Vec<f64>,
    pub dy: Vec<f64>,
    pub dyy: Vec<f64>,
    pub dyyy: Vec<f64>,
    pub dt: Vec<f64>,
    pub dty: Vec<f64>,
    /// I_y[θ_ξ] by cumulative trapezoid.
    pub iy_theta: Vec<f64>,
    /// I_y[1 − θ_ξ] by cumulative trapezoid.
    pub iy_one_minus: Vec<f64>,
    pub c_theta: Vec<f64>,
}

impl LiftBank {
    pub fn new(grid: &Grid, w: &WeightParams) -> Self {
        let (n, n_y) = (grid.n_modes(), grid.n_y());
        let ys = grid.y_nodes();
        let len = n * n_y;
        let mut bank = LiftBank {
            theta: vec![0.0; len],
            one_minus: vec![0.0; len],
            dy: vec![0.0; len],
            dyy: vec![0.0; len],
            dyyy: vec![0.0; len],
            dt: vec![0.0; len],
            dty: vec![0.0; len],
            iy_theta: vec![0.0; len],
            iy_one_minus: vec![0.0; len],
            c_theta: (0..n).map(|i| w.c_theta(grid.xi(i))).collect(),
        };
        for idx in 0..n {
            let xi = grid.xi(idx);
            let base = idx * n_y;
            for (j, &y) in ys.iter().enumerate() {
                bank.theta[base + j] = w.theta(xi, y);
                bank.one_minus[base + j] = w.one_minus_theta(xi, y);
                bank.dy[base + j] = w.dtheta_dy(xi, y);
                bank.dyy[base + j] = w.d2theta_dy2(xi, y);
                bank.dyyy[base + j] = w.d3theta_dy3(xi, y);
                bank.dt[base + j] = w.dtheta_dt(xi, y);
                bank.dty[base + j] = w.d2theta_dtdy(xi, y);
            }
            let dyg = grid.dy();
            cumtrapz_col(&bank.theta[base..base + n_y], dyg, &mut bank.iy_theta[base..base + n_y]);
            cumtrapz_col(&bank.one_minus[base..base + n_y], dyg, &mut bank.iy_one_minus[base..base + n_y]);
        }
        bank
    }

    /// Field A_ξ p_ξ(y) for a tabulated profile family p.
    pub fn lift(&self, a: &SurfaceSpectrum, profile: &[f64]) -> SpectralField {
        let grid = *a.grid();
        let n_y = grid.n_y();
        let mut out = SpectralField::zeros(grid);
        out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            let p = &profile[idx * n_y..(idx + 1) * n_y];
            col.iter_mut().zip(p).for_each(|(z, &v)| *z = a[idx] * v);
        });
        out
    }
}

/// v̄_ξ = −iξ I_y[w̄_ξ].
pub fn vbar(wbar: &SpectralField) -> SpectralField {
    &apply_multiplier(&integrate_y(wbar), Symbol::IXi) * -1.0
}

/// Which coupling terms enter the w̄ equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeckFlags {
    /// N(w̄, w̄)
    pub nonlinear: bool,
    /// L, M and the A-dependent part of B
    pub coupling: bool,
}

impl DeckFlags {
    pub const FULL: DeckFlags = DeckFlags { nonlinear: true, coupling: true };
    pub const LINEAR: DeckFlags = DeckFlags { nonlinear: false, coupling: false };
}

impl Default for DeckFlags {
    fn default() -> Self {
        Self::FULL
    }
}

/// The four coupling terms.
#[derive(Clone, Debug, PartialEq)]
pub struct Terms {
    pub n: SpectralField,
    pub l: SpectralField,
    pub m: SpectralField,
    pub b: SpectralField,
}

/// ∂y-differentiated term family.
#[derive(Clone, Debug, PartialEq)]
pub struct DyTerms {
    pub dy_n: SpectralField,
    pub dy_l: SpectralField,
    pub dy_m: SpectralField,
    pub dy_b: SpectralField,
}

/// Precomputed factors shared by every term at one state.
pub struct TermContext<'a> {
    state: &'a DeckState,
    pub bank: LiftBank,
    pub wy: SpectralField,
    pub iyw: SpectralField,
    pub vbar: SpectralField,
    /// A_ξ θ_ξ
    pub th: SpectralField,
    /// A_ξ ∂yθ_ξ
    pub th_y: SpectralField,
    /// A_ξ ∂yyθ_ξ
    pub th_yy: SpectralField,
    /// −iξ A_ξ I_y[θ_ξ]
    pub va: SpectralField,
}

fn mul_acc(acc: &mut [f64], a: &[f64], b: &[f64], s: f64) {
    acc.par_iter_mut().zip(a.par_iter().zip(b.par_iter())).for_each(|(o, (x, y))| *o += s * x * y);
}

impl<'a> TermContext<'a> {
    pub fn new(state: &'a DeckState) -> Self {
        let grid = *state.grid();
        let w = state.weights();
        let bank = LiftBank::new(&grid, &w);
        let wy = ddy(&state.wbar);
        let iyw = integrate_y(&state.wbar);
        let vbar = &apply_multiplier(&iyw, Symbol::IXi) * -1.0;
        let th = bank.lift(&state.a, &bank.theta);
        let th_y = bank.lift(&state.a, &bank.dy);
        let th_yy = bank.lift(&state.a, &bank.dyy);
        let va = &apply_multiplier(&bank.lift(&state.a, &bank.iy_theta), Symbol::IXi) * -1.0;
        Self { state, bank, wy, iyw, vbar, th, th_y, th_yy, va }
    }

    pub fn state(&self) -> &DeckState {
        self.state
    }

    fn grid(&self) -> Grid {
        *self.state.grid()
    }

    fn finish(&self, phys: &[f64]) -> Result<SpectralField> {
        let mut out: SpectralField = spectrum_dealiased(&self.grid(), phys)?;
        out.zero_boundary_rows();
        Ok(out)
    }

    /// N_ξ = (w̄ ∂x w̄ + v̄ ∂y w̄)_ξ.
    pub fn term_n(&self) -> Result<SpectralField> {
        let w = physical_dealiased(&self.state.wbar);
        let wx = physical_dealiased(&apply_multiplier(&self.state.wbar, Symbol::IXi));
        let v = physical_dealiased(&self.vbar);
        let wy = physical_dealiased(&self.wy);
        let mut acc = vec![0.0; w.len()];
        mul_acc(&mut acc, &w, &wx, 1.0);
        mul_acc(&mut acc, &v, &wy, 1.0);
        self.finish(&acc)
    }

    /// L_ξ = (w̄ ∂x(Aθ) + Aθ ∂x w̄ + v̄ ∂y(Aθ))_ξ.
    pub fn term_l(&self) -> Result<SpectralField> {
        let w = physical_dealiased(&self.state.wbar);
        let wx = physical_dealiased(&apply_multiplier(&self.state.wbar, Symbol::IXi));
        let v = physical_dealiased(&self.vbar);
        let th = physical_dealiased(&self.th);
        let thx = physical_dealiased(&apply_multiplier(&self.th, Symbol::IXi));
        let thy = physical_dealiased(&self.th_y);
        let mut acc = vec![0.0; w.len()];
        mul_acc(&mut acc, &w, &thx, 1.0);
        mul_acc(&mut acc, &th, &wx, 1.0);
        mul_acc(&mut acc, &v, &thy, 1.0);
        self.finish(&acc)
    }

    /// M_ξ = (v_A ∂y w̄)_ξ with v_A = −∂x(A I_y[θ]).
    pub fn term_m(&self) -> Result<SpectralField> {
        let va = physical_dealiased(&self.va);
        let wy = physical_dealiased(&self.wy);
        let mut acc = vec![0.0; va.len()];
        mul_acc(&mut acc, &va, &wy, 1.0);
        self.finish(&acc)
    }

    /// iξ(I_∞[w̄_ξ] − I_y[w̄_ξ]), the only part of B that survives A = 0.
    pub fn term_b_wbar(&self) -> SpectralField {
        let grid = self.grid();
        let n_y = grid.n_y();
        let i_inf = integrate_y_full(&self.state.wbar);
        let mut out = SpectralField::zeros(grid);
        let nyq = grid.nyquist();
        out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            if idx == nyq {
                return;
            }
            let ixi = Complex64::new(0.0, grid.xi(idx));
            let iy = self.iyw.column(idx);
            for j in 0..n_y {
                col[j] = ixi * (i_inf[idx] - iy[j]);
            }
        });
        out.zero_boundary_rows();
        out
    }

    /// Rewritten B (every summand decays as y → ∞), with ∂tA supplied.
    pub fn term_b(&self, dta: &SurfaceSpectrum) -> Result<SpectralField> {
        let grid = self.grid();
        let n_y = grid.n_y();
        let ys = grid.y_nodes();
        let a = &self.state.a;
        let bank = &self.bank;
        let nyq = grid.nyquist();
        let mut lin = SpectralField::zeros(grid);
        lin.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            let xi = grid.xi(idx);
            let ixi = if idx == nyq { Complex64::default() } else { Complex64::new(0.0, xi) };
            let base = idx * n_y;
            let c = bank.c_theta[idx];
            for j in 0..n_y {
                let k = base + j;
                col[j] = a[idx] * (bank.dt[k] - bank.dyy[k])
                    - dta[idx] * bank.one_minus[k]
                    + ixi * a[idx] * (-ys[j] * bank.one_minus[k] - (c - bank.iy_one_minus[k]));
            }
        });
        lin += &self.term_b_wbar();

        let th = physical_dealiased(&self.th);
        let thx = physical_dealiased(&apply_multiplier(&self.th, Symbol::IXi));
        let va = physical_dealiased(&self.va);
        let thy = physical_dealiased(&self.th_y);
        let mut acc = vec![0.0; th.len()];
        mul_acc(&mut acc, &th, &thx, 1.0);
        mul_acc(&mut acc, &va, &thy, 1.0);
        let mut quad: SpectralField = spectrum_dealiased(&grid, &acc)?;
        // −i∫(ξ−η)A_ηA_{ξ−η}dη is y-independent
        let flat = bo_nonlinear(a)?;
        for (idx, col) in quad.columns_mut().enumerate() {
            col.iter_mut().for_each(|z| *z += flat[idx]);
        }
        lin += &quad;
        lin.zero_boundary_rows();
        Ok(lin)
    }

    /// All four terms under the given flags; `dta` is ∂tA used inside B.
    pub fn terms(&self, flags: DeckFlags, dta: &SurfaceSpectrum) -> Result<Terms> {
        let grid = self.grid();
        let n = if flags.nonlinear { self.term_n()? } else { SpectralField::zeros(grid) };
        let (l, m, b) = if flags.coupling {
            (self.term_l()?, self.term_m()?, self.term_b(dta)?)
        } else {
            (SpectralField::zeros(grid), SpectralField::zeros(grid), self.term_b_wbar())
        };
        Ok(Terms { n, l, m, b })
    }

    /// Differentiated terms in product-rule-cancelled form.
    pub fn dy_terms(&self, dta: &SurfaceSpectrum) -> Result<DyTerms> {
        let grid = self.grid();
        let n_y = grid.n_y();
        let ys = grid.y_nodes();
        let wbar = &self.state.wbar;
        let a = &self.state.a;
        let wyy = d2dy2(wbar);

        let p = |f: &SpectralField| physical_dealiased(f);
        let px = |f: &SpectralField| physical_dealiased(&apply_multiplier(f, Symbol::IXi));
        let w = p(wbar);
        let wy = p(&self.wy);
        let wxy = px(&self.wy);
        let wyy_p = p(&wyy);
        let v = p(&self.vbar);
        let th = p(&self.th);
        let thx = px(&self.th);
        let thxy = px(&self.th_y);
        let thyy = p(&self.th_yy);
        let va = p(&self.va);
        let len = w.len();

        let mut acc = vec![0.0; len];
        mul_acc(&mut acc, &w, &wxy, 1.0);
        mul_acc(&mut acc, &v, &wyy_p, 1.0);
        let dy_n = self.finish(&acc)?;

        let mut acc = vec![0.0; len];
        mul_acc(&mut acc, &wy, &thx, 1.0);
        mul_acc(&mut acc, &w, &thxy, 1.0);
        mul_acc(&mut acc, &th, &wxy, 1.0);
        mul_acc(&mut acc, &v, &thyy, 1.0);
        let dy_l = self.finish(&acc)?;

        let mut acc = vec![0.0; len];
        mul_acc(&mut acc, &thx, &wy, -1.0);
        mul_acc(&mut acc, &va, &wyy_p, 1.0);
        let dy_m = self.finish(&acc)?;

        let mut acc = vec![0.0; len];
        mul_acc(&mut acc, &th, &thxy, 1.0);
        mul_acc(&mut acc, &va, &thyy, 1.0);
        let mut dy_b = self.finish(&acc)?;
        let bank = &self.bank;
        let nyq = grid.nyquist();
        dy_b.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
            let xi = grid.xi(idx);
            let ixi = if idx == nyq { Complex64::default() } else { Complex64::new(0.0, xi) };
            let base = idx * n_y;
            let wcol = wbar.column(idx);
            for j in 1..n_y - 1 {
                let k = base + j;
                col[j] += a[idx] * (bank.dty[k] - bank.dyyy[k]) + dta[idx] * bank.dy[k] - ixi * wcol[j]
                    + ixi * a[idx] * ys[j] * bank.dy[k];
            }
        });
        Ok(DyTerms { dy_n, dy_l, dy_m, dy_b })
    }

    /// Reference L by direct mode sums with the partner-frequency lift profiles.
    pub fn term_l_direct(&self) -> SpectralField {
        let grid = self.grid();
        let n_y = grid.n_y();
        let kc = grid.dealias_cutoff() as i64;
        let mu = grid.spectral_measure();
        let wbar = &self.state.wbar;
        let a = &self.state.a;
        let bank = &self.bank;
        let mut out = SpectralField::zeros(grid);
        out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(ik, col)| {
            let k = grid.mode_number(ik);
            if k.abs() > kc {
                return;
            }
            for m in -kc..=kc {
                let q = k - m;
                if q.abs() > kc {
                    continue;
                }
                let (im, iq) = (grid.index_of(m).unwrap(), grid.index_of(q).unwrap());
                let (eta, xq) = (grid.xi(im), grid.xi(iq));
                for j in 0..n_y {
                    let t1 = wbar.at(im, j) * Complex64::new(0.0, xq) * a[iq] * bank.theta[iq * n_y + j];
                    let t2 = a[im] * bank.theta[im * n_y + j] * Complex64::new(0.0, xq) * wbar.at(iq, j);
                    let t3 = Complex64::new(0.0, -eta) * self.iyw.at(im, j) * a[iq] * bank.dy[iq * n_y + j];
                    col[j] += (t1 + t2 + t3) * mu;
                }
            }
            col[0] = Complex64::default();
            col[n_y - 1] = Complex64::default();
        });
        out
    }

    /// Reference M by direct mode sums.
    pub fn term_m_direct(&self) -> SpectralField {
        let grid = self.grid();
        let n_y = grid.n_y();
        let kc = grid.dealias_cutoff() as i64;
        let mu = grid.spectral_measure();
        let a = &self.state.a;
        let bank = &self.bank;
        let mut out = SpectralField::zeros(grid);
        out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(ik, col)| {
            let k = grid.mode_number(ik);
            if k.abs() > kc {
                return;
            }
            for m in -kc..=kc {
                let q = k - m;
                if q.abs() > kc {
                    continue;
                }
                let (im, iq) = (grid.index_of(m).unwrap(), grid.index_of(q).unwrap());
                let eta = grid.xi(im);
                for j in 0..n_y {
                    col[j] += Complex64::new(0.0, -eta) * a[im] * bank.iy_theta[im * n_y + j] * self.wy.at(iq, j) * mu;
                }
            }
            col[0] = Complex64::default();
            col[n_y - 1] = Complex64::default();
        });
        out
    }

    /// The pre-rewrite form of B (without the decay-friendly regrouping), evaluated with
    /// direct mode sums. Used to cross-check [`TermContext::term_b`].
    pub fn term_b_original(&self, dta: &SurfaceSpectrum) -> SpectralField {
        let grid = self.grid();
        let n_y = grid.n_y();
        let ys = grid.y_nodes();
        let kc = grid.dealias_cutoff() as i64;
        let mu = grid.spectral_measure();
        let a = &self.state.a;
        let bank = &self.bank;
        let nyq = grid.nyquist();
        let mut out = SpectralField::zeros(grid);
        out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(ik, col)| {
            let xi = grid.xi(ik);
            let ixi = if ik == nyq { Complex64::default() } else { Complex64::new(0.0, xi) };
            let base = ik * n_y;
            for j in 0..n_y {
                let kk = base + j;
                col[j] = a[ik] * (bank.dt[kk] - bank.dyy[kk])
                    + dta[ik] * (bank.theta[kk] - 1.0)
                    + (dta[ik] + ixi * xi.abs() * a[ik])
                    + ixi * (a[ik] * (ys[j] * bank.theta[kk] - bank.iy_theta[kk]) - self.iyw.at(ik, j));
            }
            let k = grid.mode_number(ik);
            if k.abs() > kc {
                return;
            }
            for m in -kc..=kc {
                let q = k - m;
                if q.abs() > kc {
                    continue;
                }
                let (im, iq) = (grid.index_of(m).unwrap(), grid.index_of(q).unwrap());
                let (eta, xq) = (grid.xi(im), grid.xi(iq));
                let amq = a[im] * a[iq] * mu;
                for j in 0..n_y {
                    let s = Complex64::new(0.0, xq) * bank.theta[im * n_y + j] * bank.theta[iq * n_y + j]
                        - Complex64::new(0.0, eta) * bank.iy_theta[im * n_y + j] * bank.dy[iq * n_y + j];
                    col[j] += amq * s;
                }
            }
        });
        out.zero_boundary_rows();
        out
    }
}

pub fn term_n(wbar: &SpectralField, eps: f64) -> Result<SpectralField> {
    let state = DeckState {
        wbar: wbar.clone(),
        a: SurfaceSpectrum::zeros(*wbar.grid()),
        t: 0.0,
        eps,
    };
    TermContext::new(&state).term_n()
}

pub fn term_l(state: &DeckState) -> Result<SpectralField> {
    TermContext::new(state).term_l()
}

pub fn term_m(state: &DeckState) -> Result<SpectralField> {
    TermContext::new(state).term_m()
}

/// B with ∂tA substituted by the forced Benjamin–Ono right-hand side.
pub fn term_b(state: &DeckState) -> Result<SpectralField> {
    let dta = bo_rhs(&state.a, &state.wbar, &state.weights())?;
    TermContext::new(state).term_b(&dta)
}

pub fn dy_terms(state: &DeckState) -> Result<DyTerms> {
    let dta = bo_rhs(&state.a, &state.wbar, &state.weights())?;
    TermContext::new(state).dy_terms(&dta)
}

/// ∂yy w̄ − iξ y w̄ with the compact Laplacian; Dirichlet rows zero.
pub fn linear_operator(wbar: &SpectralField) -> SpectralField {
    let grid = *wbar.grid();
    let lap = CompactLaplacian::new(grid.n_y(), grid.dy());
    let mut out = lap.apply(wbar);
    let ys = grid.y_nodes();
    let nyq = grid.nyquist();
    let n_y = grid.n_y();
    out.data_mut().par_chunks_mut(n_y).enumerate().for_each(|(idx, col)| {
        if idx == nyq {
            return;
        }
        let ixi = Complex64::new(0.0, grid.xi(idx));
        let w = wbar.column(idx);
        for j in 1..n_y - 1 {
            col[j] -= ixi * ys[j] * w[j];
        }
    });
    out
}

/// Full right-hand side of the w̄ equation.
pub fn prandtl_rhs(state: &DeckState) -> Result<SpectralField> {
    let dta = bo_rhs(&state.a, &state.wbar, &state.weights())?;
    prandtl_rhs_with(state, DeckFlags::FULL, &dta).map(|(rhs, _)| rhs)
}

/// Right-hand side under `flags`; returns the assembled rhs and the terms it used.
pub fn prandtl_rhs_with(state: &DeckState, flags: DeckFlags, dta: &SurfaceSpectrum) -> Result<(SpectralField, Terms)> {
    if !state.is_finite() {
        return Err(Error::config("non-finite state"));
    }
    let ctx = TermContext::new(state);
    let terms = ctx.terms(flags, dta)?;
    let mut rhs = linear_operator(&state.wbar);
    rhs -= &terms.n;
    rhs -= &terms.l;
    rhs -= &terms.m;
    rhs -= &terms.b;
    rhs.zero_boundary_rows();
    Ok((rhs, terms))
}

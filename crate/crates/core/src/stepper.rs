//! Coupled IMEX time integration of (w̄, A) and the radius ODE.
//!
//! w̄: per-mode Crank–Nicolson on M⁻¹D2 − iξy (one complex tridiagonal solve per mode,
//! compact mass matrix M on the left), explicit AB2 for −(N+L+M+B). The first step, and
//! every step of `ImexRk2`, is the Heun variant with trapezoidal explicit terms.
//! A: exact integrating factor e^{−iξ|ξ|Δt} for dispersion, explicit AB2/Heun for the rest.
//! τ: forward Euler on τ̇ = −Γ₁ − 1.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use crate::audit::sample_row;
use crate::bo::{bo_rhs_with, dispersion, BoFlags};
use crate::deck::{linear_operator, prandtl_rhs_with, DeckFlags, DeckState, TermContext};
use crate::error::{Error, Result};
use crate::ledger::EnergyLedger;
use crate::norms::{advance_tau, composite_norms, gammas, Constants, NormParams};
use crate::spectral::tridiag::solve_into;
use crate::spectral::{CompactLaplacian, Grid, SpectralField, SurfaceSpectrum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Cnab2,
    ImexRk2,
}

/// Time-integration settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    pub dt: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Ledger sample cadence in steps.
    pub sample_every: usize,
    /// Checkpoint cadence in steps; 0 disables.
    pub checkpoint_every: usize,
}

impl StepperConfig {
    pub fn new(dt: f64, t_end: f64) -> Result<Self> {
        let cfg = Self { dt, scheme: Scheme::Cnab2, t_end, sample_every: 1, checkpoint_every: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config(format!("t_end must be nonnegative, got {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(Error::config("sample_every must be at least 1"));
        }
        Ok(())
    }

    /// Number of uniform steps covering [0, t_end].
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// Additive source terms (manufactured solutions).
pub trait Forcing: Send + Sync {
    fn eval(&self, t: f64) -> (SpectralField, SurfaceSpectrum);
}

/// Physics switches and norm parameters shared by stepping and sampling.
#[derive(Clone)]
pub struct Model {
    pub r: f64,
    pub delta: f64,
    pub constants: Constants,
    pub deck: DeckFlags,
    pub bo: BoFlags,
    /// Keep w̄ fixed (BO-only runs).
    pub freeze_wbar: bool,
    /// Keep τ fixed.
    pub freeze_tau: bool,
    pub forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Model {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Model")
            .field("r", &self.r)
            .field("delta", &self.delta)
            .field("constants", &self.constants)
            .field("deck", &self.deck)
            .field("bo", &self.bo)
            .field("freeze_wbar", &self.freeze_wbar)
            .field("freeze_tau", &self.freeze_tau)
            .field("forcing", &self.forcing.is_some())
            .finish()
    }
}

impl Model {
    pub fn full(r: f64, delta: f64) -> Self {
        Self {
            r,
            delta,
            constants: Constants::default(),
            deck: DeckFlags::FULL,
            bo: BoFlags::FULL,
            freeze_wbar: false,
            freeze_tau: false,
            forcing: None,
        }
    }

    /// Unforced Benjamin–Ono with w̄ held at its initial value.
    pub fn bo_only(r: f64, delta: f64) -> Self {
        Self { deck: DeckFlags::LINEAR, bo: BoFlags::UNFORCED, freeze_wbar: true, ..Self::full(r, delta) }
    }

    /// Heat equation plus transport for w̄; A frozen by zero data.
    pub fn linear(r: f64, delta: f64) -> Self {
        Self {
            deck: DeckFlags::LINEAR,
            bo: BoFlags { lift_drift: false, forcing: false, dispersion: true, nonlinear: false },
            ..Self::full(r, delta)
        }
    }

    pub fn norm_params(&self, tau: f64) -> Result<NormParams> {
        NormParams::new(tau.max(0.0), self.r, self.delta)
    }

    fn explicit_bo_flags(&self) -> BoFlags {
        BoFlags { dispersion: false, ..self.bo }
    }
}

/// Right-hand sides at one state.
pub struct Rhs {
    /// explicit part of ∂t w̄
    pub f_w: SpectralField,
    /// explicit part of ∂tA (no dispersion)
    pub g_a: SurfaceSpectrum,
    /// full ∂tA
    pub dta: SurfaceSpectrum,
}

/// Explicit right-hand sides; `dta` includes dispersion and is the ∂tA used inside B.
pub fn explicit_rhs(state: &DeckState, model: &Model) -> Result<Rhs> {
    let grid = *state.grid();
    let w = state.weights();
    let mut g_a = bo_rhs_with(&state.a, Some(&state.wbar), &w, model.explicit_bo_flags())?;
    let forcing = model.forcing.as_ref().map(|f| f.eval(state.t));
    if let Some((_, fa)) = &forcing {
        g_a += fa;
    }
    let mut dta = g_a.clone();
    if model.bo.dispersion {
        dta += &dispersion(&state.a);
    }
    let f_w = if model.freeze_wbar {
        SpectralField::zeros(grid)
    } else {
        let ctx = TermContext::new(state);
        let t = ctx.terms(model.deck, &dta)?;
        let mut f = &(&(&t.n + &t.l) + &t.m) + &t.b;
        f.scale(-1.0);
        if let Some((fw, _)) = &forcing {
            f += fw;
        }
        f.zero_boundary_rows();
        f
    };
    Ok(Rhs { f_w, g_a, dta })
}

/// Full semi-discrete ∂t w̄ (implicit plus explicit parts).
pub fn full_rhs_w(state: &DeckState, rhs: &Rhs, model: &Model) -> SpectralField {
    if model.freeze_wbar {
        return SpectralField::zeros(*state.grid());
    }
    let mut out = linear_operator(&state.wbar);
    out += &rhs.f_w;
    out.zero_boundary_rows();
    out
}

/// Per-mode Crank–Nicolson operator for M u' = (D2 − iξMY) u + M F.
struct CrankNicolson {
    grid: Grid,
    h: f64,
    dt: f64,
    m_sub: Vec<f64>,
    m_diag: Vec<f64>,
    m_sup: Vec<f64>,
}

impl CrankNicolson {
    fn new(grid: Grid, dt: f64) -> Self {
        let lap = CompactLaplacian::new(grid.n_y(), grid.dy());
        let (s, d, p) = lap.mass_bands();
        Self {
            grid,
            h: 0.5 * dt,
            dt,
            m_sub: s.iter().map(|z| z.re).collect(),
            m_diag: d.iter().map(|z| z.re).collect(),
            m_sup: p.iter().map(|z| z.re).collect(),
        }
    }

    fn xi(&self, idx: usize) -> f64 {
        if idx == self.grid.nyquist() {
            0.0
        } else {
            self.grid.xi(idx)
        }
    }

    /// Solves for u^{n+1} given u^n and the explicit combination `f`.
    fn solve_mode(&self, idx: usize, u: &[Complex64], f: &[Complex64], out: &mut [Complex64]) {
        let n_y = u.len();
        let m = n_y - 2;
        let ixi = Complex64::new(0.0, self.xi(idx));
        let inv_dy2 = 1.0 / (self.grid.dy() * self.grid.dy());
        let y = |j: usize| self.grid.y(j);
        let h = self.h;
        let mut sub = vec![Complex64::default(); m];
        let mut diag = vec![Complex64::default(); m];
        let mut sup = vec![Complex64::default(); m];
        let mut rhs = vec![Complex64::default(); m];
        for r in 0..m {
            let j = r + 1;
            let (ms, md, mp) = (self.m_sub[r], self.m_diag[r], self.m_sup[r]);
            // (D2 − iξMY) row applied to u^n
            let d2u = (u[j - 1] - u[j] * 2.0 + u[j + 1]) * inv_dy2;
            let myu = u[j - 1] * (ms * y(j - 1)) + u[j] * (md * y(j)) + u[j + 1] * (mp * y(j + 1));
            let mu = u[j - 1] * ms + u[j] * md + u[j + 1] * mp;
            let mf = f[j - 1] * ms + f[j] * md + f[j + 1] * mp;
            rhs[r] = mu + (d2u - ixi * myu) * h + mf * self.dt;
            sub[r] = (Complex64::new(1.0, 0.0) + ixi * (h * y(j - 1))) * ms - h * inv_dy2;
            diag[r] = (Complex64::new(1.0, 0.0) + ixi * (h * y(j))) * md + 2.0 * h * inv_dy2;
            sup[r] = (Complex64::new(1.0, 0.0) + ixi * (h * y(j + 1))) * mp - h * inv_dy2;
        }
        let mut scratch = vec![Complex64::default(); m];
        out[0] = Complex64::default();
        out[n_y - 1] = Complex64::default();
        solve_into(&sub, &diag, &sup, &rhs, &mut scratch, &mut out[1..n_y - 1]);
    }

    fn advance(&self, u: &SpectralField, f: &SpectralField) -> SpectralField {
        let n_y = self.grid.n_y();
        let mut out = SpectralField::zeros(self.grid);
        out.data_mut()
            .par_chunks_mut(n_y)
            .zip(u.data().par_chunks(n_y).zip(f.data().par_chunks(n_y)))
            .enumerate()
            .for_each(|(idx, (o, (uc, fc)))| self.solve_mode(idx, uc, fc, o));
        out
    }
}

/// e^{−iξ|ξ|Δt} per mode (identity when dispersion is off).
fn dispersion_factor(grid: &Grid, dt: f64, on: bool) -> Vec<Complex64> {
    (0..grid.n_modes())
        .map(|idx| {
            if !on || idx == grid.nyquist() {
                Complex64::new(1.0, 0.0)
            } else {
                let xi = grid.xi(idx);
                Complex64::from_polar(1.0, -xi * xi.abs() * dt)
            }
        })
        .collect()
}

fn mul_modes(a: &SurfaceSpectrum, e: &[Complex64]) -> SurfaceSpectrum {
    let mut out = a.clone();
    out.data_mut().iter_mut().zip(e).for_each(|(z, f)| *z *= f);
    out
}

#[derive(Clone, Debug)]
struct History {
    f_w: SpectralField,
    g_a: SurfaceSpectrum,
}

/// Trajectory state: deck fields, radius, step counter and AB2 history.
#[derive(Clone, Debug)]
pub struct RunState {
    pub deck: DeckState,
    pub tau: f64,
    pub step: usize,
    pub t0: f64,
    history: Option<History>,
}

impl RunState {
    pub fn new(deck: DeckState, tau: f64) -> Self {
        let t0 = deck.t;
        Self { deck, tau, step: 0, t0, history: None }
    }

    pub fn t(&self) -> f64 {
        self.deck.t
    }

    pub fn has_history(&self) -> bool {
        self.history.is_some()
    }
}

/// Γ₁ at the current state and radius.
pub fn gamma1_at(deck: &DeckState, tau: f64, model: &Model) -> Result<f64> {
    let c = composite_norms(deck, &model.norm_params(tau)?);
    Ok(gammas(c.x, c.z, c.h, deck.eps, model.delta, model.constants.c1, model.constants.c2).gamma1)
}

/// Advances (w̄, A, τ) by one step.
pub fn step(run: &RunState, cfg: &StepperConfig, model: &Model) -> Result<RunState> {
    if !(run.tau > 0.0) {
        return Err(Error::RadiusExhausted { tau: run.tau });
    }
    if !run.deck.is_finite() {
        return Err(Error::BlowUp { t: run.t() });
    }
    let grid = *run.deck.grid();
    let dt = cfg.dt;
    let cn = CrankNicolson::new(grid, dt);
    let e = dispersion_factor(&grid, dt, model.bo.dispersion);
    let t_next = run.t0 + (run.step + 1) as f64 * dt;
    let now = explicit_rhs(&run.deck, model)?;

    let heun = cfg.scheme == Scheme::ImexRk2 || run.history.is_none();
    let (mut wbar, mut a) = if heun {
        let w_pred = if model.freeze_wbar { run.deck.wbar.clone() } else { cn.advance(&run.deck.wbar, &now.f_w) };
        let mut a_pred = run.deck.a.clone();
        a_pred.axpy(dt, &now.g_a);
        let a_pred = mul_modes(&a_pred, &e);
        let pred = DeckState { wbar: w_pred, a: a_pred, t: t_next, eps: run.deck.eps };
        if !pred.is_finite() {
            return Err(Error::BlowUp { t: t_next });
        }
        let next = explicit_rhs(&pred, model)?;
        let wbar = if model.freeze_wbar {
            run.deck.wbar.clone()
        } else {
            let mut f = now.f_w.clone();
            f += &next.f_w;
            f.scale(0.5);
            cn.advance(&run.deck.wbar, &f)
        };
        let mut a = mul_modes(&run.deck.a, &e);
        a.axpy(0.5 * dt, &mul_modes(&now.g_a, &e));
        a.axpy(0.5 * dt, &next.g_a);
        (wbar, a)
    } else {
        let hist = run.history.as_ref().expect("history present");
        let wbar = if model.freeze_wbar {
            run.deck.wbar.clone()
        } else {
            let mut f = now.f_w.clone();
            f.scale(1.5);
            f.axpy(-0.5, &hist.f_w);
            cn.advance(&run.deck.wbar, &f)
        };
        let mut a = mul_modes(&run.deck.a, &e);
        a.axpy(1.5 * dt, &mul_modes(&now.g_a, &e));
        let e2: Vec<Complex64> = e.iter().map(|z| z * z).collect();
        a.axpy(-0.5 * dt, &mul_modes(&hist.g_a, &e2));
        (wbar, a)
    };
    wbar.symmetrize();
    wbar.zero_boundary_rows();
    a.symmetrize();
    let deck = DeckState { wbar, a, t: t_next, eps: run.deck.eps };
    if !deck.is_finite() {
        return Err(Error::BlowUp { t: t_next });
    }
    let tau = if model.freeze_tau { run.tau } else { advance_tau(run.tau, gamma1_at(&run.deck, run.tau, model)?, dt)? };
    Ok(RunState {
        deck,
        tau,
        step: run.step + 1,
        t0: run.t0,
        history: Some(History { f_w: now.f_w, g_a: now.g_a }),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    TEnd,
    RadiusExhausted,
    BlowUp,
    Interrupted,
}

impl Termination {
    pub fn exit_code(self) -> i32 {
        match self {
            Termination::TEnd | Termination::Interrupted => 0,
            Termination::BlowUp => 2,
            Termination::RadiusExhausted => 3,
        }
    }
}

pub struct RunOutcome {
    /// Last good state.
    pub state: RunState,
    pub ledger: EnergyLedger,
    pub reason: Termination,
}

/// Hooks called by [`run_to_end`].
#[derive(Default)]
pub struct RunHooks<'a> {
    /// Called every `checkpoint_every` steps and on termination.
    pub on_checkpoint: Option<&'a mut dyn FnMut(&RunState) -> Result<()>>,
    pub stop: Option<&'a AtomicBool>,
    /// Skip ledger sampling entirely (Γ₁ is still evaluated for τ).
    pub no_ledger: bool,
}

/// Steps until t_end or a terminal event; the ledger gets the initial row and one row per
/// `sample_every` steps.
pub fn run_to_end(run: RunState, cfg: &StepperConfig, model: &Model, mut hooks: RunHooks<'_>) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut ledger = EnergyLedger::new(run.deck.eps);
    if !hooks.no_ledger {
        ledger.push(sample_row(&run.deck, run.tau, model)?)?;
    }
    let n_steps = cfg.n_steps();
    let mut current = run;
    let mut reason = Termination::TEnd;
    let first = current.step;
    while current.step - first < n_steps {
        if hooks.stop.map(|s| s.load(Ordering::Relaxed)).unwrap_or(false) {
            reason = Termination::Interrupted;
            break;
        }
        match step(&current, cfg, model) {
            Ok(next) => current = next,
            Err(Error::BlowUp { t }) => {
                log::warn!("blow-up detected at t = {t}");
                reason = Termination::BlowUp;
                break;
            }
            Err(Error::RadiusExhausted { tau }) => {
                log::warn!("analyticity radius exhausted at t = {} (tau -> {tau})", current.t());
                reason = Termination::RadiusExhausted;
                break;
            }
            Err(e) => return Err(e),
        }
        let k = current.step - first;
        if !hooks.no_ledger && (k % cfg.sample_every == 0 || k == n_steps) {
            ledger.push(sample_row(&current.deck, current.tau, model)?)?;
        }
        if cfg.checkpoint_every > 0 && k % cfg.checkpoint_every == 0 {
            if let Some(cb) = hooks.on_checkpoint.as_mut() {
                cb(&current)?;
            }
        }
    }
    if let Some(cb) = hooks.on_checkpoint.as_mut() {
        cb(&current)?;
    }
    Ok(RunOutcome { state: current, ledger, reason })
}

/// Source terms that make a prescribed trajectory an exact solution of the semi-discrete
/// system: f = ∂t(exact) − rhs(exact).
pub struct Manufactured {
    pub exact: Box<dyn Fn(f64) -> DeckState + Send + Sync>,
    pub exact_dt: Box<dyn Fn(f64) -> (SpectralField, SurfaceSpectrum) + Send + Sync>,
    pub model: Model,
}

impl Forcing for Manufactured {
    fn eval(&self, t: f64) -> (SpectralField, SurfaceSpectrum) {
        let s = (self.exact)(t);
        let (dw, da) = (self.exact_dt)(t);
        let rhs = explicit_rhs(&s, &self.model).expect("manufactured state is valid");
        // B sees the forced ∂tA, which equals da on the exact trajectory
        let mut fw = if self.model.freeze_wbar {
            SpectralField::zeros(*s.grid())
        } else {
            &dw - &prandtl_rhs_with(&s, self.model.deck, &da).expect("manufactured state is valid").0
        };
        fw.zero_boundary_rows();
        (fw, &da - &rhs.dta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bo::bo_soliton;

    const EPS: f64 = 1.0 / 64.0;

    #[test]
    fn zero_state_stays_zero() {
        let g = Grid::new(16, 2.0, 33, 10.0).unwrap();
        let run = RunState::new(DeckState::zeros(g, 0.0, EPS), 1.0);
        let cfg = StepperConfig::new(1e-4, 1e-4).unwrap();
        let model = Model::full(2.5, 4.0);
        let next = step(&run, &cfg, &model).unwrap();
        assert_eq!(next.deck.wbar.max_abs(), 0.0);
        assert_eq!(next.deck.a.max_abs(), 0.0);
        assert!((next.tau - (1.0 - 1e-4 * (64.0 + 1.0))).abs() < 1e-15);
    }

    #[test]
    fn t_end_zero_is_identity() {
        let g = Grid::new(16, 2.0, 33, 10.0).unwrap();
        let mut deck = DeckState::zeros(g, 0.0, EPS);
        deck.a[1] = Complex64::new(0.1, 0.0);
        deck.a[15] = Complex64::new(0.1, 0.0);
        let run = RunState::new(deck.clone(), 0.5);
        let cfg = StepperConfig::new(1e-3, 0.0).unwrap();
        let out = run_to_end(run, &cfg, &Model::full(2.5, 4.0), RunHooks::default()).unwrap();
        assert_eq!(out.reason, Termination::TEnd);
        assert_eq!(out.state.deck, deck);
        assert_eq!(out.ledger.len(), 1);
    }

    #[test]
    fn heat_column_matches_image_solution() {
        let g = Grid::new(8, 1.0, 512, 12.0).unwrap();
        let exact = |t: f64, y: f64| {
            let s = 1.0 + 4.0 * t;
            ((-(y - 4.0).powi(2) / s).exp() - (-(y + 4.0).powi(2) / s).exp()) / s.sqrt()
        };
        let mut deck = DeckState::zeros(g, 0.0, EPS);
        for j in 1..511 {
            deck.wbar.set(0, j, Complex64::new(exact(0.0, g.y(j)), 0.0));
        }
        let cfg = StepperConfig::new(1e-3, 0.1).unwrap();
        let mut model = Model::linear(2.5, 4.0);
        model.freeze_tau = true;
        let out = run_to_end(RunState::new(deck, 1.0), &cfg, &model, RunHooks { no_ledger: true, ..Default::default() }).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for j in 0..512 {
            let e = exact(0.1, g.y(j));
            num += (out.state.deck.wbar.at(0, j).re - e).powi(2);
            den += e * e;
        }
        assert!((num / den).sqrt() < 1e-5, "{}", (num / den).sqrt());
    }

    #[test]
    fn hermitian_and_dirichlet_preserved() {
        let g = Grid::new(16, 2.0, 65, 12.0).unwrap();
        let mut deck = DeckState::zeros(g, 0.0, EPS);
        for (k, amp) in [(1i64, 0.02), (2, 0.01)] {
            let (i, c) = (g.index_of(k).unwrap(), g.index_of(-k).unwrap());
            for j in 1..64 {
                let y = g.y(j);
                let v = Complex64::new(amp, 0.5 * amp) * y * (-y * y / 4.0).exp();
                deck.wbar.set(i, j, v);
                deck.wbar.set(c, j, v.conj());
            }
            deck.a[i] = Complex64::new(amp, -amp);
            deck.a[c] = Complex64::new(amp, amp);
        }
        let mut run = RunState::new(deck, 0.5);
        let cfg = StepperConfig::new(1e-4, 1e-3).unwrap();
        let model = Model::full(2.5, 4.0);
        for _ in 0..5 {
            run = step(&run, &cfg, &model).unwrap();
            assert_eq!(run.deck.invariant_defect(), 0.0);
        }
    }

    #[test]
    fn bo_only_mode_is_independent_of_wbar_coupling() {
        let g = Grid::new(256, 10.0, 16, 8.0).unwrap();
        let wave = bo_soliton(&g, 0.2, 0.0).unwrap();
        let mut deck = DeckState::zeros(g, 0.0, EPS);
        deck.a = wave.spectrum.clone();
        let cfg = StepperConfig::new(1e-3, 0.01).unwrap();
        let mut bo_model = Model::bo_only(2.5, 4.0);
        bo_model.freeze_tau = true;
        let bo = run_to_end(RunState::new(deck.clone(), 1.0), &cfg, &bo_model, RunHooks::default()).unwrap();
        // full stepping of w̄ with every coupling switched off
        let mut decoupled = Model::full(2.5, 4.0);
        decoupled.deck = DeckFlags::LINEAR;
        decoupled.bo = BoFlags::UNFORCED;
        decoupled.freeze_tau = true;
        for j in 1..15 {
            deck.wbar.set(1, j, Complex64::new(0.01, 0.0));
            deck.wbar.set(255, j, Complex64::new(0.01, 0.0));
        }
        let other = run_to_end(RunState::new(deck, 1.0), &cfg, &decoupled, RunHooks::default()).unwrap();
        assert_eq!(bo.state.deck.a, other.state.deck.a);
        let col = |l: &EnergyLedger| l.rows.iter().map(|r| (r.t_a2, r.ident.a_energy)).collect::<Vec<_>>();
        assert_eq!(col(&bo.ledger), col(&other.ledger));
    }
}

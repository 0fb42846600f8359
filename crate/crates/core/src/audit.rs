//! Energy-identity audits and nonlinear-bound monitors.
//!
//! Every ledger sample stores the ingredients of three balances (A, w̄ and the vorticity
//! χ∂yw̄ at the lagging exponent r−1/2). Residuals use centered differences of the stored
//! scalars, so they vanish at the integrator's order.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::deck::{DeckState, TermContext};
use crate::error::{Error, Result};
use crate::ledger::{centered_residuals, EnergyLedger, IdentityScalars, LedgerRow};
use crate::norms::{
    composite_norms, gammas, inner_tau_r, inner_tilde, mode_weights, norm_tau_r_report, norm_tilde_report, ModeWeight,
    NormFields,
};
use crate::spectral::{apply_multiplier, convolve, ddy, integrate_y_full, SpectralField, Symbol};
use crate::stepper::{explicit_rhs, full_rhs_w, Model};
use crate::weights::chi;

/// Σ_k ξ_k S_k and Σ_k |ξ_k| S_k, with S_k = μe^{2τ|ξ|}⟨ξ⟩^{2r} Σ_j trap ρ² p_j |f_kj|², summed
/// over ± pairs. The Nyquist mode carries ξ = 0, as for every odd symbol.
fn odd_moment(f: &SpectralField, profile: &[f64], tau: f64, r: f64, w: &crate::weights::WeightParams) -> (f64, f64) {
    let grid = f.grid();
    let mw = mode_weights(grid, tau, r);
    let trap = grid.trap_weights();
    let rho2: Vec<f64> = grid.y_nodes().iter().map(|&y| w.rho(y).powi(2)).collect();
    let s = |idx: usize| -> f64 {
        f.column(idx).iter().enumerate().map(|(j, z)| trap[j] * rho2[j] * profile[j] * z.norm_sqr()).sum::<f64>() * mw[idx]
    };
    let (mut odd, mut scale) = (0.0, 0.0);
    for k in 1..grid.nyquist() {
        let (p, m) = (k, grid.conj_index(k));
        let (sp, sm) = (s(p), s(m));
        let xi = grid.xi(p);
        odd += xi * sp + (-xi) * sm;
        scale += xi.abs() * (sp + sm);
    }
    (odd, scale)
}

/// Norms, Γ's, T-terms and identity scalars at one state.
pub fn sample_row(state: &DeckState, tau: f64, model: &Model) -> Result<LedgerRow> {
    let grid = *state.grid();
    let np = model.norm_params(tau)?;
    let (r, lag) = (model.r, model.r - 0.5);
    let w = state.weights();
    let comp = composite_norms(state, &np);
    let gam = gammas(comp.x, comp.z, comp.h, state.eps, model.delta, model.constants.c1, model.constants.c2);

    let rhs = explicit_rhs(state, model)?;
    let dtw = full_rhs_w(state, &rhs, model);
    let ctx = TermContext::new(state);
    let terms = ctx.terms(model.deck, &rhs.dta)?;
    let dy = ctx.dy_terms(&rhs.dta)?;

    let a = &state.a;
    let ta1 = inner_tilde(&apply_multiplier(&integrate_y_full(&state.wbar), Symbol::IXi), a, tau, r).re;
    let ta2 = inner_tilde(&convolve(a, &apply_multiplier(a, Symbol::IXi))?, a, tau, r).re;
    let tw = |f: &SpectralField| inner_tau_r(f, &state.wbar, tau, r, &w).re;

    let ys = grid.y_nodes();
    let chis: Vec<f64> = ys.iter().map(|&y| chi(y)).collect();
    let nf = NormFields::new(&state.wbar);
    let tv = |f: &SpectralField| inner_tau_r(&f.mul_y_profile(&chis), &nf.chi_dy_w, tau, lag, &w).re;

    let s = w.s();
    let damp = 1.0 / (8.0 * state.eps * s * s);
    let p = &comp.parts;
    let chi_ddy_rhs = ddy(&dtw).mul_y_profile(&chis);
    let ones = vec![1.0; grid.n_y()];
    let (odd_w, odd_w_scale) = odd_moment(&state.wbar, &ones, tau, r, &w);
    let (odd_v, odd_v_scale) = odd_moment(&nf.chi_dy_w, &ys, tau, lag, &w);
    let ident = IdentityScalars {
        a_energy: 0.5 * p.a * p.a,
        a_diss: p.a_half * p.a_half,
        a_rhs: inner_tilde(&rhs.dta, a, tau, r).re,
        w_energy: 0.5 * p.w * p.w,
        w_diss: p.w_half * p.w_half,
        w_damping: damp * p.y_w * p.y_w,
        w_rhs: inner_tau_r(&dtw, &state.wbar, tau, r, &w).re - damp * p.y_w * p.y_w,
        v_energy: 0.5 * p.chi_dy_w * p.chi_dy_w,
        v_diss: p.chi_dy_w_half * p.chi_dy_w_half,
        v_damping: damp * p.y_chi_dy_w * p.y_chi_dy_w,
        v_rhs: inner_tau_r(&chi_ddy_rhs, &nf.chi_dy_w, tau, lag, &w).re - damp * p.y_chi_dy_w * p.y_chi_dy_w,
        odd_w,
        odd_v,
        odd_w_scale,
        odd_v_scale,
    };
    let top = norm_tau_r_report(&state.wbar, tau, r, &w, ModeWeight::One)
        .top_fraction
        .max(norm_tilde_report(a, tau, r, ModeWeight::One).top_fraction);
    Ok(LedgerRow {
        t: state.t,
        tau,
        x: comp.x,
        y: comp.y,
        z: comp.z,
        h: comp.h,
        e: 0.0,
        gamma1: gam.gamma1,
        gamma2: gam.gamma2,
        t_a1: ta1,
        t_a2: ta2,
        t_n: tw(&terms.n),
        t_l: tw(&terms.l),
        t_m: tw(&terms.m),
        t_b: tw(&terms.b),
        t_dyn: tv(&dy.dy_n),
        t_dyl: tv(&dy.dy_l),
        t_dym: tv(&dy.dy_m),
        t_dyb: tv(&dy.dy_b),
        residual_a: f64::NAN,
        residual_w: f64::NAN,
        residual_vort: f64::NAN,
        ident,
        top_fraction: top,
    })
}

/// One balance at one time: d/dt ½‖f‖² + (−τ̇)‖|∂x|^{1/2}f‖² against its right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityRecord {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Balance {
    A,
    W,
    Vorticity,
}

fn identity_records(rows: &[LedgerRow], which: Balance) -> Result<Vec<IdentityRecord>> {
    if rows.len() < 3 {
        return Err(Error::InsufficientHistory { need: 3, have: rows.len() });
    }
    Ok(rows
        .windows(3)
        .map(|win| {
            let (p, m, n) = (&win[0], &win[1], &win[2]);
            let dt = n.t - p.t;
            let tau_dot = (n.tau - p.tau) / dt;
            let (de, diss, rhs) = match which {
                Balance::A => (n.ident.a_energy - p.ident.a_energy, m.ident.a_diss, m.ident.a_rhs),
                Balance::W => (n.ident.w_energy - p.ident.w_energy, m.ident.w_diss, m.ident.w_rhs),
                Balance::Vorticity => (n.ident.v_energy - p.ident.v_energy, m.ident.v_diss, m.ident.v_rhs),
            };
            let lhs = de / dt - tau_dot * diss;
            let (ra, rw, rv) = centered_residuals(p, m, n);
            let residual = match which {
                Balance::A => ra,
                Balance::W => rw,
                Balance::Vorticity => rv,
            };
            IdentityRecord { t: m.t, lhs, rhs, residual }
        })
        .collect())
}

pub fn audit_a_identity(rows: &[LedgerRow]) -> Result<Vec<IdentityRecord>> {
    identity_records(rows, Balance::A)
}

pub fn audit_w_identity(rows: &[LedgerRow]) -> Result<Vec<IdentityRecord>> {
    identity_records(rows, Balance::W)
}

pub fn audit_vorticity_identity(rows: &[LedgerRow]) -> Result<Vec<IdentityRecord>> {
    identity_records(rows, Balance::Vorticity)
}

/// Largest |oddness scalar| / scale over the rows (0 when every scale vanishes).
pub fn worst_oddness(rows: &[LedgerRow]) -> f64 {
    rows.iter()
        .flat_map(|r| {
            let i = &r.ident;
            [(i.odd_w, i.odd_w_scale), (i.odd_v, i.odd_v_scale)]
        })
        .map(|(o, s)| if s > 0.0 { o.abs() / s } else { o.abs() })
        .fold(0.0, f64::max)
}

/// |T| against the norm combination bounding it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaRecord {
    pub label: String,
    pub term: f64,
    pub bound: f64,
    /// `None` when both sides vanish.
    pub ratio: Option<f64>,
}

pub const LEMMA_LABELS: [&str; 10] = ["T_A1", "T_A2", "T_N", "T_L", "T_M", "T_B", "T_dyN", "T_dyL", "T_dyM", "T_dyB"];

/// The ten bound ratios at one state.
pub fn audit_lemma_bounds(state: &DeckState, tau: f64, model: &Model) -> Result<Vec<LemmaRecord>> {
    let row = sample_row(state, tau, model)?;
    let np = model.norm_params(tau)?;
    let (r, lag) = (np.r, np.r - 0.5);
    let w = state.weights();
    let p = composite_norms(state, &np).parts;
    let nf = NormFields::new(&state.wbar);
    let w_br = norm_tau_r_report(&state.wbar, tau, r, &w, ModeWeight::Bracket).value;
    let a_br = norm_tilde_report(&state.a, tau, r, ModeWeight::Bracket).value;
    let cdy_br = norm_tau_r_report(&nf.chi_dy_w, tau, lag, &w, ModeWeight::Bracket).value;
    let inv_eps = 1.0 / state.eps;
    let (a, ah, wn, wh, dyw) = (p.a, p.a_half, p.w, p.w_half, p.dy_w);
    let (cdy, cdyh, cdyy, ycdy) = (p.chi_dy_w, p.chi_dy_w_half, p.chi_dyy_w, p.y_chi_dy_w);
    let bounds = [
        (row.t_a1, wh * ah),
        (row.t_a2, ah * ah * a + ah * a * a),
        (row.t_n, wh * w_br * dyw),
        (row.t_l, wh * wn * ah + (wn * wn + wh * wh) * a),
        (row.t_m, w_br * a_br * (dyw + ycdy)),
        (row.t_b, inv_eps * wn * a + a_br * dyw + wh * wh + wh * wn + w_br * ah * a),
        (row.t_dyn, cdy_br * cdy_br * dyw + cdyy * cdy * w_br),
        (row.t_dyl, cdy * cdy * ah + cdy * w_br * a + cdyh * cdy_br * a),
        (row.t_dym, cdy * cdy * ah + ycdy * cdyy * ah),
        (row.t_dyb, (inv_eps * a + w_br + a_br + a * a + ah * a) * cdy),
    ];
    Ok(LEMMA_LABELS
        .iter()
        .zip(bounds)
        .map(|(label, (term, bound))| {
            let ratio = if term == 0.0 && bound == 0.0 { None } else { Some(term.abs() / bound) };
            LemmaRecord { label: label.to_string(), term, bound, ratio }
        })
        .collect())
}

/// Spread of each ratio across a refinement sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementSummary {
    pub label: String,
    pub ratios: Vec<Option<f64>>,
    /// max/min over the active ratios
    pub spread: f64,
    /// strictly increasing across the sweep with spread above the limit
    pub flagged: bool,
}

pub fn refinement_summary(sweep: &[Vec<LemmaRecord>], limit: f64) -> Vec<RefinementSummary> {
    LEMMA_LABELS
        .iter()
        .enumerate()
        .map(|(i, label)| {
            let ratios: Vec<Option<f64>> = sweep.iter().map(|recs| recs[i].ratio).collect();
            let active: Vec<f64> = ratios.iter().flatten().cloned().collect();
            let (lo, hi) = active.iter().fold((f64::INFINITY, 0.0f64), |(l, h), &v| (l.min(v), h.max(v)));
            let spread = if active.is_empty() || lo == 0.0 { 1.0 } else { hi / lo };
            let growing = active.windows(2).all(|p| p[1] > p[0]);
            RefinementSummary { label: label.to_string(), ratios, spread, flagged: growing && spread > limit }
        })
        .collect()
}

/// Identity audit over a whole ledger.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub a: Vec<IdentityRecord>,
    pub w: Vec<IdentityRecord>,
    pub vorticity: Vec<IdentityRecord>,
    pub worst_oddness: f64,
    pub oddness_tolerance: f64,
    pub lemma: Vec<(f64, Vec<LemmaRecord>)>,
    pub oddness_pass: bool,
}

pub const ODDNESS_TOLERANCE: f64 = 1e-12;

impl AuditReport {
    pub fn from_ledger(ledger: &EnergyLedger, lemma: Vec<(f64, Vec<LemmaRecord>)>) -> Result<Self> {
        let rows = &ledger.rows;
        let worst = worst_oddness(rows);
        Ok(Self {
            a: audit_a_identity(rows)?,
            w: audit_w_identity(rows)?,
            vorticity: audit_vorticity_identity(rows)?,
            worst_oddness: worst,
            oddness_tolerance: ODDNESS_TOLERANCE,
            lemma,
            oddness_pass: worst < ODDNESS_TOLERANCE,
        })
    }

    pub fn max_residuals(&self) -> [f64; 3] {
        let m = |v: &[IdentityRecord]| v.iter().map(|r| r.residual.abs()).fold(0.0, f64::max);
        [m(&self.a), m(&self.w), m(&self.vorticity)]
    }

    /// One line per sample: t and lhs/rhs/residual of the three balances.
    pub fn identities_csv(&self) -> String {
        let mut s = String::from("t,lhs_A,rhs_A,residual_A,lhs_w,rhs_w,residual_w,lhs_vort,rhs_vort,residual_vort\n");
        for ((a, w), v) in self.a.iter().zip(&self.w).zip(&self.vorticity) {
            let _ = writeln!(
                s,
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
                a.t, a.lhs, a.rhs, a.residual, w.lhs, w.rhs, w.residual, v.lhs, v.rhs, v.residual
            );
        }
        s
    }

    pub fn lemma_csv(&self) -> String {
        let mut s = String::from("t,label,term,bound,ratio\n");
        for (t, recs) in &self.lemma {
            for r in recs {
                let ratio = r.ratio.map(|v| format!("{v:.17e}")).unwrap_or_else(|| "inactive".into());
                let _ = writeln!(s, "{t:.17e},{},{:.17e},{:.17e},{ratio}", r.label, r.term, r.bound);
            }
        }
        s
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let [ra, rw, rv] = self.max_residuals();
        serde_json::json!({
            "samples": self.a.len(),
            "max_residual_A": ra,
            "max_residual_w": rw,
            "max_residual_vort": rv,
            "worst_oddness": self.worst_oddness,
            "oddness_tolerance": self.oddness_tolerance,
            "oddness_pass": self.oddness_pass,
            "lemma_samples": self.lemma.len(),
        })
    }
}

/// Observed order from residuals at Δt and Δt/2.
pub fn observed_ratio(coarse: f64, fine: f64) -> f64 {
    coarse.abs() / fine.abs()
}

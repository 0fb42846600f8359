//! Named initial data and resolution of a [`RunConfig`] into a ready-to-step run.

use num_complex::Complex64;
use serde::Serialize;
use std::sync::Arc;

use crate::bo::bo_soliton;
use crate::checkpoint::Checkpoint;
use crate::config::{GridConfig, InitialConfig, ModelConfig, OutputConfig, Physics, RunConfig, StepperSection};
use crate::deck::DeckState;
use crate::error::{Error, Result};
use crate::norms::{initial_energy, select_parameters, selector_delta, selector_eps, Selection};
use crate::spectral::{Grid, SpectralField, SurfaceSpectrum};
use crate::stepper::{Manufactured, Model, RunState, StepperConfig};

pub const PRESETS: [&str; 4] = ["small-data-certified", "bo-soliton", "heat-column", "manufactured-convergence"];

/// Target E₀ of the certified preset, measured at radius 10τ₀.
pub const CERTIFIED_E0: f64 = 0.95e-2;
pub const SOLITON_SPEED: f64 = 0.125;
/// Steps per certified window when no Δt is given.
pub const CERTIFIED_STEPS: usize = 64;

/// Default configuration of a preset.
pub fn preset_config(name: &str) -> Result<RunConfig> {
    let initial = InitialConfig { preset: Some(name.to_string()), file: None };
    let cfg = match name {
        "small-data-certified" => RunConfig {
            stepper: StepperSection { certified: true, ..Default::default() },
            initial,
            ..Default::default()
        },
        "bo-soliton" => RunConfig {
            grid: GridConfig { n_modes: 512, lx: 40.0, n_y: 16, y_max: 8.0 },
            model: ModelConfig { physics: Physics::BoOnly, freeze_tau: true, ..Default::default() },
            stepper: StepperSection { dt: Some(1e-3), t_end: Some(1.0), ..Default::default() },
            initial,
            output: OutputConfig { cadence: 100, ..Default::default() },
        },
        "heat-column" => RunConfig {
            grid: GridConfig { n_modes: 8, lx: 1.0, n_y: 512, y_max: 12.0 },
            model: ModelConfig { physics: Physics::Linear, freeze_tau: true, ..Default::default() },
            stepper: StepperSection { dt: Some(1e-4), t_end: Some(0.1), ..Default::default() },
            initial,
            output: OutputConfig { cadence: 100, ..Default::default() },
        },
        "manufactured-convergence" => RunConfig {
            grid: GridConfig { n_modes: 16, lx: 2.0, n_y: 65, y_max: 12.0 },
            model: ModelConfig { freeze_tau: true, ..Default::default() },
            stepper: StepperSection { dt: Some(1e-3), t_end: Some(0.1), ..Default::default() },
            initial,
            output: OutputConfig { cadence: 10, ..Default::default() },
            ..Default::default()
        },
        _ => return Err(Error::config(format!("unknown preset '{name}'"))),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn set_pair(f: &mut SpectralField, g: &Grid, k: i64, j: usize, v: Complex64) {
    f.set(g.index_of(k).unwrap(), j, v);
    f.set(g.index_of(-k).unwrap(), j, v.conj());
}

/// Gaussian-modulated modes |k| ≤ 3 before scaling to the target energy.
fn certified_shape(g: &Grid, eps: f64) -> DeckState {
    let mut s = DeckState::zeros(*g, 0.0, eps);
    let coeffs = [Complex64::new(1.0, 0.5), Complex64::new(-0.4, 0.3), Complex64::new(0.2, -0.25)];
    for (m, c) in coeffs.iter().enumerate() {
        let k = m as i64 + 1;
        for j in 1..g.n_y() - 1 {
            let y = g.y(j);
            set_pair(&mut s.wbar, g, k, j, c * y * (-y * y / 2.0).exp());
        }
        s.a[g.index_of(k).unwrap()] = c.conj() * 0.5;
        s.a[g.index_of(-k).unwrap()] = c * 0.5;
    }
    s
}

/// Image solution of the heat equation on the half line, G(y−4) − G(y+4).
pub fn heat_column_exact(t: f64, y: f64) -> f64 {
    let s = 1.0 + 4.0 * t;
    ((-(y - 4.0).powi(2) / s).exp() - (-(y + 4.0).powi(2) / s).exp()) / s.sqrt()
}

/// Smooth prescribed trajectory on modes ±1, ±2.
pub fn manufactured_exact(g: &Grid, eps: f64, t: f64) -> DeckState {
    let mut s = DeckState::zeros(*g, t, eps);
    let (amp_w, amp_a) = (0.05 * (1.0 + 0.5 * t.sin()), 0.05 * t.cos());
    for (k, c) in [(1i64, Complex64::new(1.0, 0.3)), (2, Complex64::new(-0.5, 0.4))] {
        for j in 1..g.n_y() - 1 {
            let y = g.y(j);
            set_pair(&mut s.wbar, g, k, j, c * amp_w * y * y * (-y * y / 2.0).exp());
        }
        s.a[g.index_of(k).unwrap()] = c * amp_a;
        s.a[g.index_of(-k).unwrap()] = c.conj() * amp_a;
    }
    s
}

fn manufactured_exact_dt(g: &Grid, eps: f64, t: f64) -> (SpectralField, SurfaceSpectrum) {
    let base = manufactured_exact(g, eps, 0.0);
    // w̄ ∝ 1 + ½ sin t, A ∝ cos t
    let mut dw = base.wbar;
    dw.scale(0.5 * t.cos());
    let mut da = base.a;
    da.scale(-t.sin());
    (dw, da)
}

pub fn manufactured_forcing(g: Grid, eps: f64, model: Model) -> Manufactured {
    Manufactured {
        exact: Box::new(move |t| manufactured_exact(&g, eps, t)),
        exact_dt: Box::new(move |t| manufactured_exact_dt(&g, eps, t)),
        model,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolitonInfo {
    pub speed: f64,
    /// −1 for a depression wave
    pub sign: f64,
    pub velocity: f64,
    pub residual: f64,
    pub rejected_residual: f64,
}

/// Preset initial state at t = 0 (ε only enters the weights).
pub fn preset_state(name: &str, g: &Grid, eps: f64) -> Result<(DeckState, Option<SolitonInfo>)> {
    let mut s = DeckState::zeros(*g, 0.0, eps);
    let mut info = None;
    match name {
        "small-data-certified" => s = certified_shape(g, eps),
        "bo-soliton" => {
            let wave = bo_soliton(g, SOLITON_SPEED, 0.0)?;
            info = Some(SolitonInfo {
                speed: SOLITON_SPEED,
                sign: wave.sign,
                velocity: wave.velocity,
                residual: wave.residual,
                rejected_residual: wave.rejected_residual,
            });
            s.a = wave.spectrum;
        }
        "heat-column" => {
            for j in 1..g.n_y() - 1 {
                s.wbar.set(0, j, Complex64::new(heat_column_exact(0.0, g.y(j)), 0.0));
            }
        }
        "manufactured-convergence" => s = manufactured_exact(g, eps, 0.0),
        _ => return Err(Error::config(format!("unknown preset '{name}'"))),
    }
    Ok((s, info))
}

/// A run resolved from its configuration.
#[derive(Debug)]
pub struct Prepared {
    pub config: RunConfig,
    pub model: Model,
    pub stepper: StepperConfig,
    pub run: RunState,
    pub e0: f64,
    pub selection: Option<Selection>,
    pub soliton: Option<SolitonInfo>,
    pub notes: Vec<String>,
}

impl Prepared {
    pub fn grid(&self) -> &Grid {
        self.run.deck.grid()
    }
}

/// Model for the configured physics with the given δ.
pub fn build_model(m: &ModelConfig, delta: f64) -> Model {
    let mut model = match m.physics {
        Physics::Full => Model::full(m.r, delta),
        Physics::BoOnly => Model::bo_only(m.r, delta),
        Physics::Linear => Model::linear(m.r, delta),
    };
    model.constants = m.constants;
    model.freeze_tau = m.freeze_tau;
    model
}

/// Builds the model, stepper and initial state; `resume` replaces the configured initial data.
pub fn prepare(cfg: &RunConfig, resume: Option<Checkpoint>) -> Result<Prepared> {
    cfg.validate()?;
    let m = &cfg.model;
    let mut notes = Vec::new();
    let from_file = match (&resume, &cfg.initial.file) {
        (Some(_), _) => None,
        (None, Some(path)) => Some(Checkpoint::read(path)?),
        (None, None) => None,
    };
    let checkpoint = resume.or(from_file);
    let (mut state, tau_start, soliton) = match &checkpoint {
        Some(c) => {
            let cg = *c.state.grid();
            let want = cfg.grid.build()?;
            if !cg.same_shape(&want) || cg.lx() != want.lx() || cg.y_max() != want.y_max() {
                notes.push(format!(
                    "checkpoint grid {}x{} (L_x = {}, y_max = {}) replaces the configured grid",
                    cg.n_modes(),
                    cg.n_y(),
                    cg.lx(),
                    cg.y_max()
                ));
            }
            (c.state.clone(), c.tau, None)
        }
        None => {
            let name = cfg.initial.preset.as_deref().expect("validated");
            let (s, info) = preset_state(name, &cfg.grid.build()?, 1.0 / 64.0)?;
            (s, m.tau0, info)
        }
    };
    let delta = match (&checkpoint, m.delta) {
        (_, Some(d)) => d,
        (Some(c), None) => c.delta,
        (None, None) => selector_delta(&m.constants),
    };
    let r = match &checkpoint {
        Some(c) if c.r != m.r => {
            notes.push(format!("checkpoint r = {} replaces the configured r = {}", c.r, m.r));
            c.r
        }
        _ => m.r,
    };
    // ε does not enter the norms at t = 0
    let mut e0 = 0.0;
    if checkpoint.is_none() {
        if cfg.initial.preset.as_deref() == Some("small-data-certified") {
            let raw = initial_energy(&state, m.tau0, r, delta)?;
            let scale = (CERTIFIED_E0 / raw).sqrt();
            state.wbar.scale(scale);
            state.a.scale(scale);
        }
        e0 = initial_energy(&state, m.tau0, r, delta)?;
    }

    let s = &cfg.stepper;
    let (selection, eps, t_end, dt) = if s.certified {
        if checkpoint.is_some() {
            return Err(Error::config("certified runs start from preset data"));
        }
        let sel = select_parameters(e0, m.tau0, &m.constants)?;
        let n = match s.dt {
            Some(dt) => (sel.t_star / dt).ceil().max(1.0) as usize,
            None => CERTIFIED_STEPS,
        };
        (Some(sel), sel.eps, sel.t_star, sel.t_star / n as f64)
    } else {
        let eps = match (m.eps, &checkpoint) {
            (Some(e), _) => e,
            (None, Some(c)) => c.state.eps,
            (None, None) if e0 > 0.0 => selector_eps(e0, m.tau0, &m.constants),
            (None, None) => 1.0 / 64.0,
        };
        let t_end = s.t_end.ok_or_else(|| Error::config("stepper.t_end is required unless certified"))?;
        let dt = s.dt.ok_or_else(|| Error::config("stepper.dt is required unless certified"))?;
        (None, eps, (t_end - state.t).max(0.0), dt)
    };
    state.eps = eps;
    crate::weights::WeightParams::new(state.t, eps)?;

    let mut model = build_model(m, delta);
    model.r = r;
    if cfg.initial.preset.as_deref() == Some("manufactured-convergence") {
        let forcing = manufactured_forcing(*state.grid(), eps, model.clone());
        model.forcing = Some(Arc::new(forcing));
    }
    let stepper = StepperConfig {
        dt,
        scheme: s.scheme,
        t_end,
        sample_every: cfg.output.cadence,
        checkpoint_every: cfg.output.checkpoint_every,
    };
    stepper.validate()?;
    Ok(Prepared {
        config: cfg.clone(),
        model,
        stepper,
        run: RunState::new(state, tau_start),
        e0,
        selection,
        soliton,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stepper::{run_to_end, RunHooks};

    #[test]
    fn every_preset_prepares() {
        for name in PRESETS {
            let mut cfg = preset_config(name).unwrap();
            if !cfg.stepper.certified {
                cfg.stepper.t_end = Some(0.0);
            }
            let p = prepare(&cfg, None).unwrap();
            assert_eq!(p.run.deck.invariant_defect(), 0.0, "{name}");
        }
    }

    #[test]
    fn certified_preset_hits_target_energy() {
        let p = prepare(&preset_config("small-data-certified").unwrap(), None).unwrap();
        assert!((p.e0 - CERTIFIED_E0).abs() < 1e-12);
        let sel = p.selection.unwrap();
        assert_eq!(sel.eps, 1.0 / 64.0);
        assert!((p.stepper.dt * CERTIFIED_STEPS as f64 - sel.t_star).abs() < 1e-18);
        assert_eq!(p.stepper.n_steps(), CERTIFIED_STEPS);
    }

    #[test]
    fn manufactured_solution_is_second_order() {
        let cfg = preset_config("manufactured-convergence").unwrap();
        let err = |dt: f64| {
            let mut c = cfg.clone();
            c.stepper.dt = Some(dt);
            c.stepper.t_end = Some(0.2);
            let p = prepare(&c, None).unwrap();
            let (g, eps) = (*p.grid(), p.run.deck.eps);
            let out = run_to_end(p.run, &p.stepper, &p.model, RunHooks { no_ledger: true, ..Default::default() }).unwrap();
            let exact = manufactured_exact(&g, eps, out.state.t());
            let dw = (&out.state.deck.wbar - &exact.wbar).max_abs();
            let da = (&out.state.deck.a - &exact.a).max_abs();
            dw.max(da)
        };
        let (e1, e2) = (err(0.02), err(0.01));
        let order = (e1 / e2).log2();
        assert!(order >= 1.9, "{e1} {e2} order {order}");
    }
}

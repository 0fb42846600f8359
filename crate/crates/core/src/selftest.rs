//! Fast property checks run by `tripledeck selftest`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bo::{bo_rhs, bo_soliton, traveling_residual};
use crate::checkpoint::Checkpoint;
use crate::deck::{DeckState, TermContext};
use crate::error::Result;
use crate::reconstruct::blasius_solve_with;
use crate::spectral::{apply_multiplier, convolve, convolve_direct, forward_transform, inverse_transform, Grid, SpectralField, SurfaceSpectrum, Symbol};
use crate::stepper::{step, Model, RunState, StepperConfig};
use crate::weights::hardy_check;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub limit: f64,
    pub pass: bool,
}

fn check(name: &'static str, value: f64, limit: f64) -> Check {
    Check { name, value, limit, pass: value.is_finite() && value <= limit }
}

fn random_field(g: Grid, rng: &mut ChaCha8Rng) -> SpectralField {
    let mut f = SpectralField::from_fn(g, |_, xi, y| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.5 * xi * xi - 0.3 * y * y).exp() * y
    });
    f.symmetrize();
    f.zero_boundary_rows();
    f
}

fn random_surface(g: Grid, rng: &mut ChaCha8Rng) -> SurfaceSpectrum {
    let mut a = SurfaceSpectrum::from_fn(g, |_, xi| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.5 * xi * xi).exp());
    a.symmetrize();
    a
}

fn random_state(g: Grid, rng: &mut ChaCha8Rng, t: f64) -> DeckState {
    let mut s = DeckState::zeros(g, t, 1.0 / 64.0);
    s.wbar = random_field(g, rng);
    s.a = random_surface(g, rng);
    s
}

/// Runs every check with a fixed seed.
pub fn run_all() -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7d6b);
    let mut out = Vec::new();

    let g = Grid::new(32, 2.0, 64, 10.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let (f, h) = (random_field(g, &mut rng), random_field(g, &mut rng));
        worst = worst.max((&convolve(&f, &h)? - &convolve_direct(&f, &h)?).max_abs());
    }
    out.push(check("convolution matches direct sum", worst, 1e-12));

    let g1 = Grid::new(128, 3.0, 16, 8.0)?;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let u: Vec<f64> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: SurfaceSpectrum = forward_transform(&g1, &u)?;
        let d = inverse_transform(&apply_multiplier(&a, Symbol::IXiAbsXi));
        let pairing: f64 = u.iter().zip(&d).map(|(p, q)| p * q).sum();
        let norm2: f64 = u.iter().map(|p| p * p).sum();
        worst = worst.max(pairing.abs() / norm2);
    }
    out.push(check("skew-adjointness of dx|dx|", worst, 1e-13));

    let mut violations = 0.0;
    for _ in 0..20 {
        let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dy = 0.01;
        let f: Vec<f64> = (0..3001)
            .map(|j| {
                let y = j as f64 * dy;
                c.iter().enumerate().map(|(k, ck)| ck * ((k + 1) as f64 * y / 2.0).sin()).sum::<f64>() * (-0.5 * y * y).exp()
            })
            .collect();
        if !hardy_check(&f, dy, 0.01, 1.0 / 64.0).satisfied {
            violations += 1.0;
        }
    }
    out.push(check("weighted Hardy violations", violations, 0.0));

    let gb = Grid::new(16, 2.0, 65, 12.0)?;
    let mut worst: f64 = 0.0;
    for t in [0.0, 0.01] {
        let s = random_state(gb, &mut rng, t);
        let dta = bo_rhs(&s.a, &s.wbar, &s.weights())?;
        let ctx = TermContext::new(&s);
        worst = worst.max((&ctx.term_b(&dta)? - &ctx.term_b_original(&dta)).max_abs());
    }
    out.push(check("B rewrite matches original form", worst, 1e-10));

    let mut s = random_state(gb, &mut rng, 0.0);
    s.wbar.scale(1e-3);
    s.a.scale(1e-3);
    let mut model = Model::full(2.5, 4.36);
    model.freeze_tau = true;
    let next = step(&RunState::new(s, 1.0), &StepperConfig::new(1e-5, 1e-5)?, &model)?;
    out.push(check("step preserves symmetry and boundary rows", next.deck.invariant_defect(), 1e-14));

    let c = Checkpoint { state: random_state(gb, &mut rng, 0.5), tau: 0.05, delta: 4.36, r: 2.5 };
    let bytes = c.to_bytes();
    let back = Checkpoint::from_bytes(&bytes)?;
    out.push(check("checkpoint round trip", if back.to_bytes() == bytes { 0.0 } else { 1.0 }, 0.0));

    let (b1, b2) = (blasius_solve_with(10.0, 1e-10, 0.02)?, blasius_solve_with(10.0, 1e-10, 0.01)?);
    out.push(check("Blasius wall shear under step halving", (b1.fpp0 - b2.fpp0).abs(), 1e-6));

    let gs = Grid::new(512, 40.0, 16, 8.0)?;
    let wave = bo_soliton(&gs, crate::presets::SOLITON_SPEED, 0.0)?;
    out.push(check("soliton traveling-wave residual", traveling_residual(&wave.spectrum)?.1, 1e-6));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_all().unwrap() {
            assert!(c.pass, "{} = {:e} > {:e}", c.name, c.value, c.limit);
        }
    }
}

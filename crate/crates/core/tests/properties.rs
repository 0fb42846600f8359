use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tripledeck_core::checkpoint::Checkpoint;
use tripledeck_core::deck::DeckState;
use tripledeck_core::ledger::{EnergyLedger, LedgerRow};
use tripledeck_core::norms::{energy_series, select_parameters, t_star_conditions, Constants, EnergySample};
use tripledeck_core::spectral::{apply_multiplier, convolve, forward_transform, inverse_transform};
use tripledeck_core::stepper::{step, Model, RunState, StepperConfig};
use tripledeck_core::weights::hardy_check;
use tripledeck_core::{Grid, SpectralField, SurfaceSpectrum, Symbol};

fn grid(n_pow: u32, n_y: usize) -> Grid {
    Grid::new(1 << n_pow, 1.5, n_y, 10.0).unwrap()
}

fn field(g: Grid, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = SpectralField::from_fn(g, |_, xi, y| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.3 * xi * xi).exp() * y * (-0.4 * y * y).exp()
    });
    f.symmetrize();
    f.zero_boundary_rows();
    f
}

fn surface(g: Grid, seed: u64) -> SurfaceSpectrum {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = SurfaceSpectrum::from_fn(g, |_, xi| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * (-0.3 * xi * xi).exp());
    a.symmetrize();
    a
}

fn symbols() -> impl Strategy<Value = Symbol> {
    prop_oneof![
        Just(Symbol::IXi),
        Just(Symbol::AbsXi),
        Just(Symbol::IXiAbsXi),
        (-2.0..2.0f64).prop_map(Symbol::Bracket),
        (0.0..0.5f64).prop_map(Symbol::ExpTau),
        (0.0..2.0f64).prop_map(Symbol::AbsXiPow),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convolution_is_symmetric_and_real(n in 3u32..7, seed in any::<u64>()) {
        let g = grid(n, 16);
        let (f, h) = (field(g, seed), field(g, seed ^ 0x55));
        let fh = convolve(&f, &h).unwrap();
        let hf = convolve(&h, &f).unwrap();
        prop_assert!((&fh - &hf).max_abs() <= 1e-14 * (1.0 + fh.max_abs()));
        prop_assert!(fh.hermitian_defect() <= 1e-14 * (1.0 + fh.max_abs()));
    }

    #[test]
    fn multipliers_keep_real_data_real(n in 3u32..8, seed in any::<u64>(), s in symbols()) {
        let g = grid(n, 16);
        let a = apply_multiplier(&surface(g, seed), s);
        prop_assert!(a.hermitian_defect() <= 1e-13 * (1.0 + a.max_abs()));
        if s.is_odd() {
            prop_assert_eq!(a[g.nyquist()], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn transforms_invert_each_other(n in 3u32..9, seed in any::<u64>()) {
        let g = grid(n, 16);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..g.n_modes()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a: SurfaceSpectrum = forward_transform(&g, &u).unwrap();
        let back = inverse_transform(&a);
        let err = u.iter().zip(&back).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-13);
    }

    #[test]
    fn a_step_preserves_symmetry_and_wall_values(seed in any::<u64>(), amp in 1e-4..1e-2f64, frozen in any::<bool>()) {
        let g = grid(4, 33);
        let mut s = DeckState::zeros(g, 0.0, 1.0 / 64.0);
        s.wbar = field(g, seed);
        s.a = surface(g, seed.wrapping_add(1));
        s.wbar.scale(amp);
        s.a.scale(amp);
        let mut model = Model::full(2.5, 4.36);
        model.freeze_tau = frozen;
        let cfg = StepperConfig::new(1e-5, 2e-5).unwrap();
        let one = step(&RunState::new(s, 1.0), &cfg, &model).unwrap();
        let two = step(&one, &cfg, &model).unwrap();
        prop_assert_eq!(two.deck.invariant_defect(), 0.0);
        prop_assert!(two.tau <= 1.0);
    }

    #[test]
    fn checkpoints_round_trip_bit_exactly(n in 3u32..7, n_y in 16usize..40, seed in any::<u64>(), t in 0.0..10.0f64) {
        let g = grid(n, n_y);
        let state = DeckState::new(field(g, seed), surface(g, !seed), t, 1.0 / 64.0).unwrap();
        let c = Checkpoint { state, tau: 0.1, delta: 4.36, r: 2.5 };
        let bytes = c.to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn single_byte_corruption_is_rejected(seed in any::<u64>(), pos in any::<prop::sample::Index>(), bit in 0u8..8) {
        let g = grid(3, 16);
        let state = DeckState::new(field(g, seed), surface(g, seed), 0.0, 1.0 / 64.0).unwrap();
        let mut bytes = Checkpoint { state, tau: 0.1, delta: 4.36, r: 2.5 }.to_bytes();
        let i = pos.index(bytes.len());
        bytes[i] ^= 1 << bit;
        prop_assert!(Checkpoint::from_bytes(&bytes).is_err());
    }

    #[test]
    fn ledger_csv_round_trips(values in prop::collection::vec(-1e3..1e3f64, 4..40)) {
        let mut l = EnergyLedger::new(1.0 / 64.0);
        for (k, v) in values.iter().enumerate() {
            l.push(LedgerRow { t: k as f64 * 1e-3, tau: 0.1, x: *v, y: v.abs(), z: 0.5 * v, h: v * v, t_n: -v, ..Default::default() }).unwrap();
        }
        let text = l.to_csv();
        prop_assert_eq!(EnergyLedger::from_csv(&text, 1.0 / 64.0).unwrap().to_csv(), text);
    }

    #[test]
    fn energy_is_nondecreasing(xs in prop::collection::vec((0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.0..2.0f64), 2..30)) {
        let samples: Vec<EnergySample> = xs.iter().enumerate()
            .map(|(k, &(x, y, z, h))| EnergySample { t: k as f64 * 0.01, x, y, z, h })
            .collect();
        let e = energy_series(&samples, 1.0 / 64.0);
        prop_assert!(e.windows(2).all(|p| p[1] >= p[0]));
    }

    #[test]
    fn selected_window_satisfies_every_condition(e0 in 1e-6..5e-2f64, tau0 in 0.01..2.0f64) {
        let c = Constants::default();
        let sel = select_parameters(e0, tau0, &c).unwrap();
        prop_assert!(sel.eps <= 1.0 / 64.0 && sel.t_star <= sel.eps);
        for (lhs, rhs) in t_star_conditions(sel.t_star, e0, tau0, sel.delta, sel.eps, &c) {
            prop_assert!(lhs <= rhs);
        }
        let beyond = t_star_conditions(sel.t_star * 1.01, e0, tau0, sel.delta, sel.eps, &c);
        prop_assert!(sel.t_star == sel.eps || beyond.iter().any(|(l, r)| l > r));
    }

    #[test]
    fn hardy_holds_for_decaying_profiles(coeffs in prop::collection::vec(-1.0..1.0f64, 1..8), decay in 0.3..1.5f64, t in 0.0..0.05f64) {
        let dy = 0.005;
        let f: Vec<f64> = (0..4001).map(|j| {
            let y = j as f64 * dy;
            coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * y / 2.0).sin()).sum::<f64>() * (-decay * y * y).exp()
        }).collect();
        let rep = hardy_check(&f, dy, t, 1.0 / 64.0);
        prop_assert!(rep.satisfied, "lhs {} rhs {}", rep.lhs, rep.rhs);
    }
}

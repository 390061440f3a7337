use std::f64::consts::PI;

use proptest::prelude::*;
use wgqed_core::dde::{solve_dde, DdeProblem, FeedbackChannel};
use wgqed_core::markov::{golden_rule_rate, modulation_spectrum};
use wgqed_core::model::{enumerate_channels, AtomConfig, ModeIndex, WaveguideGeometry, DEFAULT_GUARD_BAND};

fn mode() -> impl Strategy<Value = ModeIndex> {
    (1u32..8, 1u32..8).prop_map(|(m, n)| ModeIndex { m, n })
}

/// Frequency of the first channel of a centred atom, kept off the cutoffs.
fn single_band(g: &WaveguideGeometry, x: f64) -> f64 {
    let lo = g.cutoff_frequency(ModeIndex { m: 1, n: 1 });
    let hi = g.cutoff_frequency(ModeIndex { m: 3, n: 1 }).min(g.cutoff_frequency(ModeIndex { m: 1, n: 3 }));
    lo + x * (hi - lo)
}

proptest! {
    #[test]
    fn dispersion_round_trip(aspect in 1.0f64..4.0, idx in mode(), k in 1e-3f64..50.0) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let w = g.dispersion(idx, k);
        let back = g.wavenumber_at(idx, w).unwrap();
        // inverting near cutoff amplifies the rounding of ω by (ω/k)²
        let cond = (w / k).powi(2);
        prop_assert!((back - k).abs() <= 1e-12 * k.max(1.0) + 8.0 * f64::EPSILON * cond * k);
    }

    #[test]
    fn velocity_times_density_is_one(aspect in 1.0f64..4.0, idx in mode(), excess in 1e-6f64..10.0) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let w = g.cutoff_frequency(idx) * (1.0 + excess);
        let v = g.group_velocity(idx, w).unwrap();
        let rho = g.density_of_states(idx, w).unwrap();
        prop_assert!((v * rho - 1.0).abs() < 1e-12);
        prop_assert!(v > 0.0 && v < g.c());
    }

    #[test]
    fn coupling_mirror_symmetric_in_cross_section(
        aspect in 1.0f64..4.0, idx in mode(), fx in 0.01f64..0.99, fy in 0.01f64..0.99, k in 0.0f64..20.0,
    ) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let atom = AtomConfig { omega_a: 1.0, dipole_scale: 0.3, x0: fx * g.a(), y0: fy * g.b(), z0: 0.7 };
        let mirrored = AtomConfig { x0: g.a() - atom.x0, y0: g.b() - atom.y0, ..atom };
        let a = g.coupling_at_k(&atom, idx, k);
        let b = g.coupling_at_k(&mirrored, idx, k);
        // relative to the largest value |g| can take for this mode
        let cutoff = g.cutoff_frequency(idx);
        let scale = (atom.dipole_scale * cutoff * cutoff / (PI * g.dispersion(idx, k))).sqrt();
        prop_assert!((a - b).abs() <= 1e-12 * scale);
    }

    #[test]
    fn centred_channels_sorted_and_odd(aspect in 1.0f64..3.0, w in 3.3f64..20.0) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let atom = AtomConfig::centered(&g, w, 1.0, 0.4);
        if let Ok(channels) = enumerate_channels(&g, &atom, DEFAULT_GUARD_BAND) {
            for pair in channels.windows(2) {
                prop_assert!(pair[0].cutoff <= pair[1].cutoff);
            }
            for c in &channels {
                prop_assert!(c.index.m % 2 == 1 && c.index.n % 2 == 1, "{}", c.index);
                prop_assert!(c.cutoff < w);
            }
        }
    }

    #[test]
    fn golden_rule_periodic_in_half_wavelength(aspect in 1.5f64..3.0, x in 0.05f64..0.95, z0 in 0.0f64..5.0) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let w = single_band(&g, x);
        let atom = AtomConfig::centered(&g, w, 0.5, z0);
        let k0 = g.wavenumber_at(ModeIndex { m: 1, n: 1 }, w).unwrap();
        let shifted = atom.with_z0(z0 + PI / k0);
        let r1 = golden_rule_rate(&g, &atom, DEFAULT_GUARD_BAND).unwrap().rate;
        let r2 = golden_rule_rate(&g, &shifted, DEFAULT_GUARD_BAND).unwrap().rate;
        prop_assert!((r1 - r2).abs() <= 1e-9 * r1.max(r2).max(1e-12));
    }

    #[test]
    fn golden_rule_bounded_by_twice_free_rate(aspect in 1.5f64..3.0, x in 0.05f64..0.95, z0 in 0.0f64..5.0) {
        let g = WaveguideGeometry::with_aspect(aspect).unwrap();
        let atom = AtomConfig::centered(&g, single_band(&g, x), 0.5, z0);
        let gamma: f64 = enumerate_channels(&g, &atom, DEFAULT_GUARD_BAND).unwrap().iter().map(|c| c.rate).sum();
        let r = golden_rule_rate(&g, &atom, DEFAULT_GUARD_BAND).unwrap().rate;
        prop_assert!(r >= 0.0 && r <= 4.0 * gamma * (1.0 + 1e-12));
    }

    #[test]
    fn modulation_spectrum_non_negative(t in 0.01f64..100.0, w in 0.0f64..20.0, wa in 0.0f64..20.0) {
        prop_assert!(modulation_spectrum(t, w, wa) >= 0.0);
        prop_assert!(modulation_spectrum(t, w, wa) <= t / (2.0 * PI) * (1.0 + 1e-15));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dde_amplitude_never_exceeds_one(
        rates in prop::collection::vec(0.05f64..1.0, 1..3),
        phases in prop::collection::vec(0.0f64..(2.0 * PI), 3),
        delays in prop::collection::vec(0.2f64..5.0, 3),
    ) {
        let total: f64 = rates.iter().sum();
        let channels: Vec<FeedbackChannel> = rates
            .iter()
            .enumerate()
            .map(|(i, r)| FeedbackChannel::new(r / total, phases[i], delays[i]))
            .collect();
        let trace = solve_dde(&DdeProblem::new(channels, 8.0)).unwrap();
        for a in &trace.amplitudes {
            prop_assert!(a.norm() <= 1.0 + 1e-9);
        }
    }
}

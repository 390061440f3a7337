//! Markovian layer: coupling spectrum, modulation spectrum and decay rates.
//!
//! The coupling spectrum here is the manifestly positive
//! G(ω) = Σ_mn 2·|g_mnω|²·ρ_mn(ω), where the factor 2 counts the two
//! propagation directions ±k that share each frequency. With this
//! normalisation R = 2π·G(ω_A) is the population decay rate, and for every
//! resonant channel it equals 2Γ_j(1 + cos φ_j).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{enumerate_channels, AtomConfig, ModeIndex, WaveguideGeometry};
use crate::quadrature::{integrate, integrate_complex, Estimate, Tolerance};

/// Half-width of the frequency window, in units of 1/t, kept around ω_A
/// when integrating against the modulation spectrum.
pub const WINDOW_WIDTH: f64 = 200.0;

/// Panels per side of the window: the sinc² lobes are 2π/t wide.
const WINDOW_PANELS: usize = 128;

/// Exact cutoffs are rejected within this relative distance.
const CUTOFF_EPS: f64 = 1e-14;

/// G(ω) at one frequency.
pub fn coupling_spectrum(geom: &WaveguideGeometry, atom: &AtomConfig, omega: f64) -> Result<f64> {
    let mut total = 0.0;
    for idx in geom.coupled_modes_below(atom, omega * (1.0 + CUTOFF_EPS)) {
        let cutoff = geom.cutoff_frequency(idx);
        if (omega - cutoff).abs() <= CUTOFF_EPS * omega {
            return Err(Error::AtCutoffSingularity { omega, cutoff, index: idx });
        }
        total += channel_spectrum(geom, atom, idx, omega)?;
    }
    Ok(total)
}

fn channel_spectrum(geom: &WaveguideGeometry, atom: &AtomConfig, idx: ModeIndex, omega: f64) -> Result<f64> {
    let g = geom.coupling_strength(atom, idx, omega)?;
    let rho = geom.density_of_states(idx, omega)?;
    Ok(2.0 * g * g * rho)
}

/// G(ω) tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSpectrum {
    pub omegas: Vec<f64>,
    pub values: Vec<f64>,
}

impl CouplingSpectrum {
    pub fn sample(geom: &WaveguideGeometry, atom: &AtomConfig, omegas: Vec<f64>) -> Result<Self> {
        let values = omegas
            .par_iter()
            .map(|&w| coupling_spectrum(geom, atom, w))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { omegas, values })
    }
}

/// Markovian decay of the excited state.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayEstimate {
    /// Population decay rate R.
    pub rate: f64,
    /// R split by channel, ascending cutoff.
    pub per_channel: Vec<(ModeIndex, f64)>,
    /// Σ_j Γ_j sin φ_j, the mirror-induced shift of the transition.
    pub frequency_shift: f64,
}

impl DecayEstimate {
    /// Amplitude e^{−(R/2 + iδ)t} in the frame rotating at ω_A.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        (-Complex64::new(0.5 * self.rate, self.frequency_shift) * t).exp()
    }
}

/// Golden-rule rate R = 2π·G(ω_A). Below the lowest coupled cutoff there is
/// nothing to decay into and the rate is zero.
pub fn golden_rule_rate(geom: &WaveguideGeometry, atom: &AtomConfig, guard_band: f64) -> Result<DecayEstimate> {
    let channels = enumerate_channels(geom, atom, guard_band)?;
    let per_channel = channels
        .iter()
        .map(|ch| Ok((ch.index, 2.0 * PI * channel_spectrum(geom, atom, ch.index, atom.omega_a)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DecayEstimate {
        rate: per_channel.iter().map(|(_, r)| r).sum(),
        per_channel,
        frequency_shift: channels.iter().map(|c| c.rate * c.phase.sin()).sum(),
    })
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// f(ω) = (t/2π)·sinc²((ω − ω_A)t/2); unit area for every t > 0.
pub fn modulation_spectrum(t: f64, omega: f64, omega_a: f64) -> f64 {
    let s = sinc(0.5 * (omega - omega_a) * t);
    t / (2.0 * PI) * s * s
}

/// π/2 − Si(z) for large z from the auxiliary-function asymptotics.
fn si_complement_asymptotic(z: f64) -> f64 {
    let inv2 = 1.0 / (z * z);
    let (mut f, mut g) = (0.0, 0.0);
    let (mut tf, mut tg) = (1.0, 1.0);
    for k in 0..30 {
        f += tf;
        g += tg;
        let (a, b) = ((2 * k + 1) as f64, (2 * k + 2) as f64);
        let next_f = -tf * a * b * inv2;
        let next_g = -tg * b * (b + 1.0) * inv2;
        if next_f.abs() < 1e-18 && next_g.abs() < 1e-18 {
            break;
        }
        tf = next_f;
        tg = next_g;
    }
    (f / z) * z.cos() + (g * inv2) * z.sin()
}

/// Fraction of the modulation spectrum lying outside ω_A ± `half_width`.
pub fn modulation_tail_mass(t: f64, half_width: f64) -> f64 {
    // ∫_X^∞ sin²x/x² dx = sin²X/X + π/2 − Si(2X)
    let tail = |x: f64| x.sin().powi(2) / x + si_complement_asymptotic(2.0 * x);
    const SWITCH: f64 = 50.0;
    let x = 0.5 * half_width * t;
    let one_side = if x >= SWITCH {
        tail(x)
    } else {
        let panels = ((SWITCH - x) / PI).ceil() as usize + 1;
        let near = integrate(
            |u| {
                let s = sinc(u);
                s * s
            },
            x,
            SWITCH,
            Tolerance::relative(1e-13).with_panels(panels),
        )
        .map(|e| e.value)
        .unwrap_or(f64::NAN);
        near + tail(SWITCH)
    };
    2.0 * one_side / PI
}

/// k-interval of mode `idx` whose frequencies fall inside [lo, hi].
fn k_window(geom: &WaveguideGeometry, idx: ModeIndex, lo: f64, hi: f64) -> Option<(f64, f64)> {
    let cutoff = geom.cutoff_frequency(idx);
    if hi <= cutoff {
        return None;
    }
    let k_lo = if lo <= cutoff { 0.0 } else { geom.wavenumber_at(idx, lo).ok()? };
    let k_hi = geom.wavenumber_at(idx, hi).ok()?;
    Some((k_lo, k_hi))
}

/// Half-width of the window used by [`finite_time_rate`]: 200/t, but never
/// less than half the distance to the nearest coupled cutoff, so that the
/// neglected tail of f vanishes as t grows.
pub fn rate_window(geom: &WaveguideGeometry, atom: &AtomConfig, t: f64) -> f64 {
    let edge = geom
        .coupled_modes_below(atom, 2.0 * atom.omega_a)
        .into_iter()
        .map(|idx| (atom.omega_a - geom.cutoff_frequency(idx)).abs())
        .fold(atom.omega_a, f64::min);
    (WINDOW_WIDTH / t).max(0.5 * edge)
}

/// R(t) = 2π∫f(ω)G(ω)dω, the rate seen after a finite interaction time.
///
/// Each channel is integrated in k rather than ω, which absorbs the
/// inverse-square-root divergence of ρ at the cutoff (ω = √(Ω² + c²k²)).
/// G grows without bound at high frequency, so the integral is restricted
/// to ω_A ± [`rate_window`]; the reported error adds a tail estimate.
pub fn finite_time_rate(
    geom: &WaveguideGeometry,
    atom: &AtomConfig,
    t: f64,
    relative_tolerance: f64,
) -> Result<Estimate<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidProblem(format!("interaction time must be positive, got {t}")));
    }
    atom.validate(geom)?;
    let half = rate_window(geom, atom, t);
    let (lo, hi) = (atom.omega_a - half, atom.omega_a + half);
    // about two panels per sinc² lobe
    let lobes = (half * t / PI).ceil() as usize;
    let tol = Tolerance::relative(relative_tolerance).with_panels((2 * lobes).clamp(2 * WINDOW_PANELS, 100_000));

    let mut value = 0.0;
    let mut error = 0.0;
    for idx in geom.coupled_modes_below(atom, hi) {
        let Some((k_lo, k_hi)) = k_window(geom, idx, lo, hi) else { continue };
        let e = integrate(
            |k| {
                let omega = geom.dispersion(idx, k);
                let g = geom.coupling_at_k(atom, idx, k);
                modulation_spectrum(t, omega, atom.omega_a) * 2.0 * g * g
            },
            k_lo,
            k_hi,
            tol,
        )?;
        value += 2.0 * PI * e.value;
        error += 2.0 * PI * e.error;
    }

    let edge = [lo, hi]
        .iter()
        .filter_map(|&w| coupling_spectrum(geom, atom, w).ok())
        .fold(0.0, f64::max);
    error += 2.0 * PI * edge * modulation_tail_mass(t, half);
    Ok(Estimate { value, error })
}

/// ∫_0^t (t − s)e^{iΔs} ds.
fn memory_weight(delta: f64, t: f64) -> Complex64 {
    let x = delta * t;
    if x.abs() < 1e-2 {
        let x2 = x * x;
        let re = 0.5 - x2 / 24.0 + x2 * x2 / 720.0;
        let im = x / 6.0 - x * x2 / 120.0;
        return Complex64::new(re, im) * (t * t);
    }
    (Complex64::new(1.0, x) - Complex64::new(0.0, x).exp()) / (delta * delta)
}

/// Short-time amplitude with ε̃ frozen at 1 inside the memory integral:
/// ε(t) = e^{−iω_A t}[1 − ∫_0^t (t − s)·M(s)·e^{iω_A s} ds], where
/// M(s) = Σ∫dk |g|² e^{−iω_k s} is the reservoir memory.
///
/// The time integral is done analytically under the k integral, so only a
/// one-dimensional k quadrature remains; frequencies are kept within the
/// window ω_A ± 200/t.
pub fn perturbative_amplitude(
    geom: &WaveguideGeometry,
    atom: &AtomConfig,
    t: f64,
    relative_tolerance: f64,
) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidProblem(format!("time must be non-negative, got {t}")));
    }
    atom.validate(geom)?;
    if t == 0.0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let half = WINDOW_WIDTH / t;
    let (lo, hi) = (atom.omega_a - half, atom.omega_a + half);
    let tol = Tolerance::relative(relative_tolerance).with_panels(2 * WINDOW_PANELS);

    let mut memory = Complex64::new(0.0, 0.0);
    for idx in geom.coupled_modes_below(atom, hi) {
        let Some((k_lo, k_hi)) = k_window(geom, idx, lo, hi) else { continue };
        let e = integrate_complex(
            |k| {
                let omega = geom.dispersion(idx, k);
                let g = geom.coupling_at_k(atom, idx, k);
                memory_weight(atom.omega_a - omega, t) * (2.0 * g * g)
            },
            k_lo,
            k_hi,
            tol,
        )?;
        memory += e.value;
    }
    Ok(Complex64::from_polar(1.0, -atom.omega_a * t) * (1.0 - memory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DEFAULT_GUARD_BAND;

    fn guide() -> WaveguideGeometry {
        WaveguideGeometry::with_aspect(2.0).unwrap()
    }

    fn cutoff(m: u32, n: u32) -> f64 {
        guide().cutoff_frequency(ModeIndex { m, n })
    }

    #[test]
    fn spectrum_vanishes_below_first_cutoff() {
        let g = guide();
        let atom = AtomConfig::centered(&g, 4.0, 1.0, 0.3);
        assert_eq!(coupling_spectrum(&g, &atom, 0.95 * cutoff(1, 1)).unwrap(), 0.0);
        assert!(matches!(
            coupling_spectrum(&g, &atom, cutoff(1, 1)),
            Err(Error::AtCutoffSingularity { .. })
        ));
    }

    #[test]
    fn single_band_has_only_tm11() {
        let g = guide();
        let w = 0.5 * (cutoff(1, 1) + cutoff(3, 1));
        let atom = AtomConfig::centered(&g, w, 1.0, 0.3);
        let idx = ModeIndex { m: 1, n: 1 };
        let gk = g.coupling_strength(&atom, idx, w).unwrap();
        let rho = g.density_of_states(idx, w).unwrap();
        assert_eq!(coupling_spectrum(&g, &atom, w).unwrap(), 2.0 * gk * gk * rho);
    }

    #[test]
    fn quarter_wavelength_suppresses_tm11() {
        let g = guide();
        let w = 0.5 * (cutoff(1, 1) + cutoff(3, 1));
        let k = g.wavenumber_at(ModeIndex { m: 1, n: 1 }, w).unwrap();
        let lambda = 2.0 * PI / k;
        let atom = AtomConfig::centered(&g, w, 1.0, lambda / 4.0);
        assert!(coupling_spectrum(&g, &atom, w).unwrap() < 1e-28);
        assert!(golden_rule_rate(&g, &atom, DEFAULT_GUARD_BAND).unwrap().rate.abs() < 1e-12);
    }

    #[test]
    fn golden_rule_channel_formula() {
        let g = guide();
        let w = 0.5 * (cutoff(3, 1) + cutoff(5, 1));
        let atom = AtomConfig::centered(&g, w, 0.8, 0.9);
        let est = golden_rule_rate(&g, &atom, DEFAULT_GUARD_BAND).unwrap();
        let channels = enumerate_channels(&g, &atom, DEFAULT_GUARD_BAND).unwrap();
        assert_eq!(est.per_channel.len(), 2);
        for ((idx, r), ch) in est.per_channel.iter().zip(&channels) {
            assert_eq!(*idx, ch.index);
            let expected = 2.0 * ch.rate * (1.0 + ch.phase.cos());
            assert!((r - expected).abs() <= 1e-12 * expected);
        }
        let z0 = atom.with_z0(0.0);
        let est0 = golden_rule_rate(&g, &z0, DEFAULT_GUARD_BAND).unwrap();
        let gamma_sum: f64 = enumerate_channels(&g, &z0, DEFAULT_GUARD_BAND).unwrap().iter().map(|c| c.rate).sum();
        assert!((est0.rate - 4.0 * gamma_sum).abs() < 1e-12 * est0.rate);
        assert_eq!(est0.frequency_shift, 0.0);
    }

    #[test]
    fn no_resonance_gives_zero_rate() {
        let g = guide();
        let atom = AtomConfig::centered(&g, 0.5 * cutoff(1, 1), 1.0, 0.3);
        let est = golden_rule_rate(&g, &atom, DEFAULT_GUARD_BAND).unwrap();
        assert_eq!(est.rate, 0.0);
        assert!(est.per_channel.is_empty());
    }

    #[test]
    fn modulation_peak_and_symmetry() {
        assert!((modulation_spectrum(3.0, 5.0, 5.0) - 3.0 / (2.0 * PI)).abs() < 1e-15);
        let a = modulation_spectrum(2.0, 5.3, 5.0);
        let b = modulation_spectrum(2.0, 4.7, 5.0);
        assert!((a - b).abs() < 1e-15);
        // narrower at longer times: first zero at |ω − ω_A| = 2π/t
        assert!(modulation_spectrum(10.0, 5.0 + 2.0 * PI / 10.0, 5.0) < 1e-30);
    }

    #[test]
    fn tail_mass_branches_agree() {
        // X just below and above the switch point of the two branches
        let below = modulation_tail_mass(1.0, 99.98);
        let above = modulation_tail_mass(1.0, 100.02);
        assert!((below - above).abs() < 1e-6);
        assert!((modulation_tail_mass(1.0, 400.0) - 1.0 / (PI * 200.0)).abs() < 1e-5);
        assert!(modulation_tail_mass(1.0, 1e-3) > 0.999);
    }

    #[test]
    fn perturbative_starts_at_one() {
        let g = guide();
        let atom = AtomConfig::centered(&g, 4.5, 1.0, 0.3);
        assert_eq!(perturbative_amplitude(&g, &atom, 0.0, 1e-8).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn memory_weight_small_argument_continuity() {
        let t = 2.0;
        for d in [1e-3, 4.99e-3, 5.01e-3, 2e-2] {
            let a = memory_weight(d, t);
            let b = memory_weight(d * (1.0 + 1e-9), t);
            assert!((a - b).norm() < 1e-8);
        }
        assert!((memory_weight(0.0, t) - Complex64::new(2.0, 0.0)).norm() < 1e-15);
    }
}

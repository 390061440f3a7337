//! From a configuration to a concrete atom and its channels.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::config::{OmegaMode, ScenarioConfig, Z0Mode, DEFAULT_GAMMA1, DEFAULT_MAX_GAMMA1};
use crate::dde::FeedbackChannel;
use crate::error::{Error, Result};
use crate::model::{
    dipole_scale_for_rate, enumerate_channels, AtomConfig, ModeChannel, ModeIndex, WaveguideGeometry,
    DEFAULT_GUARD_BAND,
};

/// Largest winding number tried when co-targeting phase and delay.
const MAX_WINDING: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub geometry: WaveguideGeometry,
    pub atom: AtomConfig,
    /// Resonant channels after the max_channels cut.
    pub channels: Vec<ModeChannel>,
    /// Γ₁, the time unit of every output (1 when nothing is resonant).
    pub gamma1: f64,
    /// Emission wavelength of the first resonant channel.
    pub lambda1a: Option<f64>,
    /// Winding number n when z₀ = (φ₁ + 2πn)/(2k₀).
    pub winding: Option<u64>,
}

impl Resolved {
    /// Channels with time measured in units of 1/Γ₁.
    pub fn scaled_channels(&self) -> Vec<FeedbackChannel> {
        self.channels
            .iter()
            .map(|c| FeedbackChannel::from(c).rescaled(1.0 / self.gamma1))
            .collect()
    }
}

/// Channel view stored in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub mode: String,
    pub cutoff: f64,
    pub k0: f64,
    pub group_velocity: f64,
    pub rate: f64,
    pub phase: f64,
    pub delay: f64,
    pub rate_over_gamma1: f64,
    pub gamma1_delay: f64,
}

impl From<(&ModeChannel, f64)> for ChannelRecord {
    fn from((c, gamma1): (&ModeChannel, f64)) -> Self {
        Self {
            mode: c.index.to_string(),
            cutoff: c.cutoff,
            k0: c.k0,
            group_velocity: c.group_velocity,
            rate: c.rate,
            phase: c.phase,
            delay: c.delay,
            rate_over_gamma1: c.rate / gamma1,
            gamma1_delay: c.delay * gamma1,
        }
    }
}

pub fn resolve_omega(geom: &WaveguideGeometry, mode: OmegaMode) -> Result<f64> {
    match mode {
        OmegaMode::Absolute(w) => Ok(w),
        OmegaMode::MidbandBetween([[m1, n1], [m2, n2]]) => {
            let lo = geom.cutoff_frequency(ModeIndex::new(m1, n1)?);
            let hi = geom.cutoff_frequency(ModeIndex::new(m2, n2)?);
            Ok(0.5 * (lo + hi))
        }
    }
}

fn first_mode(geom: &WaveguideGeometry, atom: &AtomConfig) -> Option<ModeIndex> {
    geom.coupled_modes_below(atom, atom.omega_a).into_iter().next()
}

fn need_mode(geom: &WaveguideGeometry, atom: &AtomConfig, what: &str) -> Result<ModeIndex> {
    first_mode(geom, atom).ok_or_else(|| {
        Error::Config(format!(
            "{what} needs a resonant channel, but ω_A = {} lies below every coupled cutoff",
            atom.omega_a
        ))
    })
}

pub fn resolve(config: &ScenarioConfig) -> Result<Resolved> {
    config.validate()?;
    let geom = WaveguideGeometry::with_aspect(config.geometry.a_over_b)?;
    let spec = &config.atom;
    let omega_a = resolve_omega(&geom, spec.omega)?;
    let mut atom = AtomConfig {
        omega_a,
        dipole_scale: 1.0,
        x0: spec.x0_frac * geom.a(),
        y0: spec.y0_frac * geom.b(),
        z0: 0.0,
    };
    atom.validate(&geom)?;

    let first = first_mode(&geom, &atom);
    let lambda1a = first.map(|idx| 2.0 * PI / geom.wavenumber_at(idx, omega_a).expect("mode is open"));

    let mut winding = None;
    let target_rate = match spec.z0 {
        Z0Mode::Absolute(z) => {
            atom.z0 = z;
            spec.gamma1.unwrap_or(DEFAULT_GAMMA1)
        }
        Z0Mode::FractionOfLambda1a(f) => {
            let idx = need_mode(&geom, &atom, "fraction_of_lambda1a")?;
            let k0 = geom.wavenumber_at(idx, omega_a)?;
            atom.z0 = f * 2.0 * PI / k0;
            spec.gamma1.unwrap_or(DEFAULT_GAMMA1)
        }
        Z0Mode::ByGammaTau1 { gamma_tau1, phase1 } => {
            let idx = need_mode(&geom, &atom, "by_gamma_tau1")?;
            let k0 = geom.wavenumber_at(idx, omega_a)?;
            let v = geom.group_velocity(idx, omega_a)?;
            let max_rate = spec.max_gamma1.unwrap_or(DEFAULT_MAX_GAMMA1);
            let phase = phase1.rem_euclid(2.0 * PI);
            // Γ₁τ₁ = Γ₁·2z₀/v fixes Γ₁ once z₀ is picked; take the
            // closest z₀ with the right phase whose Γ₁ is small enough.
            let z_min = gamma_tau1 * v / (2.0 * max_rate);
            let n0 = ((2.0 * k0 * z_min - phase) / (2.0 * PI)).ceil().max(0.0) as u64;
            let n = (n0..n0 + 3)
                .find(|&n| {
                    let z = (phase + 2.0 * PI * n as f64) / (2.0 * k0);
                    z > 0.0 && gamma_tau1 * v / (2.0 * z) <= max_rate
                })
                .filter(|&n| n < MAX_WINDING)
                .ok_or_else(|| Error::Config(format!("cannot reach Γτ₁ = {gamma_tau1} with Γ₁ ≤ {max_rate}")))?;
            atom.z0 = (phase + 2.0 * PI * n as f64) / (2.0 * k0);
            winding = Some(n);
            gamma_tau1 * v / (2.0 * atom.z0)
        }
    };

    atom.dipole_scale = match (spec.dipole_scale, first) {
        (Some(kappa), _) => kappa,
        (None, Some(idx)) => dipole_scale_for_rate(&geom, &atom, idx, target_rate)?,
        (None, None) => {
            return Err(Error::Config(
                "no resonant channel to calibrate against: set atom.dipole_scale".into(),
            ))
        }
    };
    atom.validate(&geom)?;

    let mut channels = enumerate_channels(&geom, &atom, DEFAULT_GUARD_BAND)?;
    if let Some(n) = config.solver.max_channels {
        channels.truncate(n);
    }
    let gamma1 = channels.first().map(|c| c.rate).filter(|&r| r > 0.0).unwrap_or(1.0);
    Ok(Resolved { geometry: geom, atom, channels, gamma1, lambda1a, winding })
}

//! Guide geometry, TM-mode dispersion and atom-mode coupling.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default exclusion zone around a cutoff, relative to the atomic frequency.
pub const DEFAULT_GUARD_BAND: f64 = 1e-3;

/// Transverse couplings with |sin·sin| below this are treated as exact nodes.
const NODE_TOLERANCE: f64 = 1e-12;

/// Hollow perfectly conducting guide with walls at x = 0, a and y = 0, b,
/// closed by a mirror at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveguideGeometry {
    a: f64,
    b: f64,
    c: f64,
}

impl WaveguideGeometry {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && c.is_finite()) || a <= 0.0 || b <= 0.0 || c <= 0.0 {
            return Err(Error::InvalidGeometry(format!(
                "a, b and c must be positive, got a={a}, b={b}, c={c}"
            )));
        }
        if a < b {
            return Err(Error::InvalidGeometry(format!(
                "width a={a} must not be smaller than height b={b}"
            )));
        }
        Ok(Self { a, b, c })
    }

    /// Unit height and unit wave speed, width given as the aspect ratio.
    pub fn with_aspect(a_over_b: f64) -> Result<Self> {
        Self::new(a_over_b, 1.0, 1.0)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Lowest frequency at which TM_mn propagates.
    pub fn cutoff_frequency(&self, idx: ModeIndex) -> f64 {
        let (m, n) = (idx.m as f64, idx.n as f64);
        PI * self.c * ((m / self.a).powi(2) + (n / self.b).powi(2)).sqrt()
    }

    pub fn dispersion(&self, idx: ModeIndex, k: f64) -> f64 {
        (self.c * self.c * k * k + self.cutoff_frequency(idx).powi(2)).sqrt()
    }

    /// Non-negative propagation constant of TM_mn at `omega`.
    pub fn wavenumber_at(&self, idx: ModeIndex, omega: f64) -> Result<f64> {
        let cutoff = self.cutoff_frequency(idx);
        if omega < cutoff {
            return Err(Error::BelowCutoff { omega, cutoff, index: idx });
        }
        Ok(radial(omega, cutoff) / self.c)
    }

    /// dω/dk of TM_mn evaluated where the mode is resonant with `omega_a`.
    pub fn group_velocity(&self, idx: ModeIndex, omega_a: f64) -> Result<f64> {
        let cutoff = self.cutoff_frequency(idx);
        if omega_a <= cutoff {
            return Err(Error::BelowCutoff { omega: omega_a, cutoff, index: idx });
        }
        Ok(self.c * radial(omega_a, cutoff) / omega_a)
    }

    /// One-directional density of states dk/dω; diverges at the cutoff.
    pub fn density_of_states(&self, idx: ModeIndex, omega: f64) -> Result<f64> {
        let cutoff = self.cutoff_frequency(idx);
        if omega == cutoff {
            return Err(Error::AtCutoffSingularity { omega, cutoff, index: idx });
        }
        if omega < cutoff {
            return Err(Error::BelowCutoff { omega, cutoff, index: idx });
        }
        Ok(omega / (self.c * radial(omega, cutoff)))
    }

    /// sin(mπx₀/a)·sin(nπy₀/b): the standing-wave profile at the atom.
    pub fn transverse_factor(&self, atom: &AtomConfig, idx: ModeIndex) -> f64 {
        (idx.m as f64 * PI * atom.x0 / self.a).sin() * (idx.n as f64 * PI * atom.y0 / self.b).sin()
    }

    /// |g_mnω| for a z-oriented dipole. The coupling of the Hamiltonian is
    /// purely imaginary; only its modulus enters any observable.
    pub fn coupling_strength(&self, atom: &AtomConfig, idx: ModeIndex, omega: f64) -> Result<f64> {
        let k = self.wavenumber_at(idx, omega)?;
        Ok(self.coupling_at_k(atom, idx, k))
    }

    /// |g_mnk| as a function of the propagation constant.
    pub fn coupling_at_k(&self, atom: &AtomConfig, idx: ModeIndex, k: f64) -> f64 {
        let cutoff = self.cutoff_frequency(idx);
        let omega = self.dispersion(idx, k);
        let prefactor = (atom.dipole_scale * cutoff * cutoff / (PI * omega)).sqrt();
        (prefactor * self.transverse_factor(atom, idx) * (k * atom.z0).cos()).abs()
    }

    /// Largest mode numbers that can have a cutoff below `omega`.
    pub fn mode_bounds(&self, omega: f64) -> (u32, u32) {
        let bound = |side: f64| ((side * omega / (PI * self.c)).ceil().max(1.0)) as u32;
        (bound(self.a), bound(self.b))
    }

    /// Every TM mode with cutoff below `omega` that the atom couples to,
    /// ascending by cutoff, ties broken by (m, n).
    pub fn coupled_modes_below(&self, atom: &AtomConfig, omega: f64) -> Vec<ModeIndex> {
        let (m_max, n_max) = self.mode_bounds(omega);
        let mut modes: Vec<ModeIndex> = (1..=m_max)
            .flat_map(|m| (1..=n_max).map(move |n| ModeIndex { m, n }))
            .filter(|&idx| self.cutoff_frequency(idx) < omega)
            .filter(|&idx| self.transverse_factor(atom, idx).abs() > NODE_TOLERANCE)
            .collect();
        self.sort_by_cutoff(&mut modes);
        modes
    }

    fn sort_by_cutoff(&self, modes: &mut [ModeIndex]) {
        modes.sort_by(|p, q| {
            self.cutoff_frequency(*p)
                .total_cmp(&self.cutoff_frequency(*q))
                .then(p.cmp(q))
        });
    }
}

/// √(ω² − Ω²), written to stay accurate close to the cutoff.
fn radial(omega: f64, cutoff: f64) -> f64 {
    ((omega - cutoff) * (omega + cutoff)).sqrt()
}

/// Two-level atom with a z-oriented transition dipole.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomConfig {
    pub omega_a: f64,
    /// κ = 4d²/(Aε₀), the only place the dipole and the vacuum permittivity enter.
    pub dipole_scale: f64,
    pub x0: f64,
    pub y0: f64,
    /// Distance from the mirror.
    pub z0: f64,
}

impl AtomConfig {
    pub fn validate(&self, geom: &WaveguideGeometry) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidAtom(msg));
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return bad(format!("omega_a must be positive, got {}", self.omega_a));
        }
        if !(self.dipole_scale.is_finite() && self.dipole_scale > 0.0) {
            return bad(format!("dipole_scale must be positive, got {}", self.dipole_scale));
        }
        if !(self.x0 > 0.0 && self.x0 < geom.a()) {
            return bad(format!("x0={} outside (0, {})", self.x0, geom.a()));
        }
        if !(self.y0 > 0.0 && self.y0 < geom.b()) {
            return bad(format!("y0={} outside (0, {})", self.y0, geom.b()));
        }
        if !(self.z0.is_finite() && self.z0 >= 0.0) {
            return bad(format!("z0 must be non-negative, got {}", self.z0));
        }
        Ok(())
    }

    /// Atom in the middle of the cross-section.
    pub fn centered(geom: &WaveguideGeometry, omega_a: f64, dipole_scale: f64, z0: f64) -> Self {
        Self {
            omega_a,
            dipole_scale,
            x0: geom.a() / 2.0,
            y0: geom.b() / 2.0,
            z0,
        }
    }

    pub fn with_z0(self, z0: f64) -> Self {
        Self { z0, ..self }
    }

    pub fn with_dipole_scale(self, dipole_scale: f64) -> Self {
        Self { dipole_scale, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub m: u32,
    pub n: u32,
}

impl ModeIndex {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::InvalidGeometry(format!(
                "TM modes need m, n >= 1, got ({m}, {n})"
            )));
        }
        Ok(Self { m, n })
    }
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TM{}{}", self.m, self.n)
    }
}

/// One resonant TM channel, linearised around the atomic frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeChannel {
    pub index: ModeIndex,
    pub cutoff: f64,
    pub k0: f64,
    pub group_velocity: f64,
    /// Γ_j, the amplitude decay rate into this channel without the mirror.
    pub rate: f64,
    /// Round-trip phase 2·k0·z0.
    pub phase: f64,
    /// Round-trip time 2·z0/v.
    pub delay: f64,
}

/// Resonant channels ordered by cutoff.
///
/// Fails when the atomic frequency sits inside the guard band of a coupled
/// cutoff, above or below it, where the linear dispersion stops being valid.
pub fn enumerate_channels(
    geom: &WaveguideGeometry,
    atom: &AtomConfig,
    guard_band: f64,
) -> Result<Vec<ModeChannel>> {
    atom.validate(geom)?;
    let guard = guard_band * atom.omega_a;
    for idx in geom.coupled_modes_below(atom, atom.omega_a + guard) {
        let cutoff = geom.cutoff_frequency(idx);
        if (atom.omega_a - cutoff).abs() <= guard {
            return Err(Error::AtCutoffSingularity {
                omega: atom.omega_a,
                cutoff,
                index: idx,
            });
        }
    }

    geom.coupled_modes_below(atom, atom.omega_a)
        .into_iter()
        .map(|index| {
            let cutoff = geom.cutoff_frequency(index);
            let k0 = geom.wavenumber_at(index, atom.omega_a)?;
            let v = geom.group_velocity(index, atom.omega_a)?;
            let s = geom.transverse_factor(atom, index);
            Ok(ModeChannel {
                index,
                cutoff,
                k0,
                group_velocity: v,
                rate: atom.dipole_scale * cutoff * cutoff * s * s / (atom.omega_a * v),
                phase: 2.0 * k0 * atom.z0,
                delay: 2.0 * atom.z0 / v,
            })
        })
        .collect()
}

/// Free-space-like emission wavelength 2πc/k of channel `idx` at `omega_a`.
pub fn channel_wavelength(geom: &WaveguideGeometry, idx: ModeIndex, omega_a: f64) -> Result<f64> {
    let k = geom.wavenumber_at(idx, omega_a)?;
    Ok(2.0 * PI / k)
}

/// Dipole prefactor κ for which channel `idx` has amplitude decay rate `gamma`.
pub fn dipole_scale_for_rate(
    geom: &WaveguideGeometry,
    atom: &AtomConfig,
    idx: ModeIndex,
    gamma: f64,
) -> Result<f64> {
    let cutoff = geom.cutoff_frequency(idx);
    let v = geom.group_velocity(idx, atom.omega_a)?;
    let s = geom.transverse_factor(atom, idx);
    if s.abs() <= NODE_TOLERANCE {
        return Err(Error::InvalidAtom(format!("atom sits on a node of {idx}")));
    }
    Ok(gamma * atom.omega_a * v / (cutoff * cutoff * s * s))
}

//! Reference integrator on a discretised photon continuum.
//!
//! The atom is evolved together with one amplitude per guided photon
//! (m, n, k ≥ 0), using the exact dispersion and the exact k dependence of
//! the coupling. Each k node stands for the standing-wave mode sin/cos(kz)
//! the mirror enforces; the coupling g_k carries the cos(kz₀) factor.
//!
//! In the frame rotating at ω_A,
//!
//! ```text
//! dε̃/dt  = iδ·ε̃ − i Σ_k w_k g_k e^{i(ω_A−ω_k)t} c̃_k
//! dc̃_k/dt = −i g_k e^{−i(ω_A−ω_k)t} ε̃
//! ```
//!
//! where w_k are trapezoid weights and δ is the mirror-independent part of
//! the Lamb shift. The delay equation treats ω_A as the observed transition
//! frequency; the bare frequency here is set to ω_A − δ so the two describe
//! the same atom. Without it the two differ by a constant frequency offset
//! of order Γ.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dde::AmplitudeTrace;
use crate::error::{Error, Result};
use crate::model::{AtomConfig, ModeChannel, ModeIndex, WaveguideGeometry};
use crate::quadrature::{integrate, Tolerance};

/// Half-width of the resolved band, in units of the total Γ.
pub const DEFAULT_WINDOW: f64 = 100.0;

/// Ratio of the recurrence time of a channel to the simulated time.
pub const RECURRENCE_MARGIN: f64 = 4.0;

pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-8;

/// Uniform k nodes of one mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGrid {
    pub index: ModeIndex,
    pub k: Vec<f64>,
    pub weights: Vec<f64>,
    pub omega: Vec<f64>,
    pub coupling: Vec<f64>,
}

impl ChannelGrid {
    pub fn k_max(&self) -> f64 {
        self.k.last().copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KGrid {
    pub dk: f64,
    pub channels: Vec<ChannelGrid>,
}

impl KGrid {
    /// Nodes 0, Δk, …, up to the first node with ω(k) ≥ `omega_max`, for
    /// each listed mode. The continuum runs over ±k and everything is even
    /// in k, so the trapezoid weights are doubled: Δk at both ends, 2Δk
    /// inside.
    pub fn uniform(
        geom: &WaveguideGeometry,
        atom: &AtomConfig,
        modes: &[ModeIndex],
        omega_max: f64,
        dk: f64,
    ) -> Result<Self> {
        if !(dk > 0.0) || !dk.is_finite() {
            return Err(Error::InvalidProblem(format!("k spacing must be positive, got {dk}")));
        }
        atom.validate(geom)?;
        let channels = modes
            .iter()
            .map(|&index| {
                let cutoff = geom.cutoff_frequency(index);
                if omega_max <= cutoff {
                    return Err(Error::BelowCutoff { omega: omega_max, cutoff, index });
                }
                let k_top = geom.wavenumber_at(index, omega_max)?;
                let n = (k_top / dk).ceil().max(1.0) as usize;
                let k: Vec<f64> = (0..=n).map(|i| i as f64 * dk).collect();
                let mut weights = vec![2.0 * dk; n + 1];
                weights[0] = dk;
                weights[n] = dk;
                let omega = k.iter().map(|&k| geom.dispersion(index, k)).collect();
                let coupling = k.iter().map(|&k| geom.coupling_at_k(atom, index, k)).collect();
                Ok(ChannelGrid { index, k, weights, omega, coupling })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dk, channels })
    }

    /// Default grid for a run up to `t_max`: the resonant modes, resolved to
    /// ω_A + 100·ΣΓ, with Δk small enough that the fastest channel does not
    /// recur within 4·t_max.
    pub fn for_channels(
        geom: &WaveguideGeometry,
        atom: &AtomConfig,
        channels: &[ModeChannel],
        t_max: f64,
    ) -> Result<Self> {
        if channels.is_empty() {
            return Err(Error::InvalidProblem("no resonant channel to discretise".into()));
        }
        if !(t_max > 0.0) {
            return Err(Error::InvalidProblem(format!("t_max must be positive, got {t_max}")));
        }
        let v_max = channels.iter().map(|c| c.group_velocity).fold(0.0, f64::max);
        let gamma: f64 = channels.iter().map(|c| c.rate).sum();
        let dk = 2.0 * PI / (v_max * RECURRENCE_MARGIN * t_max);
        let modes: Vec<ModeIndex> = channels.iter().map(|c| c.index).collect();
        Self::uniform(geom, atom, &modes, atom.omega_a + DEFAULT_WINDOW * gamma, dk)
    }

    pub fn len(&self) -> usize {
        self.channels.iter().map(|c| c.k.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Shortest 2π/(v_j·Δk) over the modes resonant with the atom, or
    /// infinity when none is.
    pub fn recurrence_time(&self, geom: &WaveguideGeometry, atom: &AtomConfig) -> f64 {
        self.channels
            .iter()
            .filter_map(|c| geom.group_velocity(c.index, atom.omega_a).ok())
            .map(|v| 2.0 * PI / (v * self.dk))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Atom plus field amplitudes in the rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub atom: Complex64,
    pub field: Vec<Vec<Complex64>>,
}

impl FullState {
    pub fn excited(grid: &KGrid) -> Self {
        Self {
            atom: Complex64::new(1.0, 0.0),
            field: grid.channels.iter().map(|c| vec![Complex64::new(0.0, 0.0); c.k.len()]).collect(),
        }
    }

    /// |ε̃|² + Σ w_k |c̃_k|².
    pub fn norm(&self, grid: &KGrid) -> f64 {
        let field: f64 = grid
            .channels
            .iter()
            .zip(&self.field)
            .map(|(c, f)| c.weights.iter().zip(f).map(|(w, a)| w * a.norm_sqr()).sum::<f64>())
            .sum();
        self.atom.norm_sqr() + field
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSpaceOptions {
    /// Whether to apply the free Lamb-shift counterterm.
    pub renormalize: bool,
    pub norm_tolerance: f64,
    /// Check the ω_A-resonant modes against the recurrence horizon.
    pub check_recurrence: bool,
}

impl Default for KSpaceOptions {
    fn default() -> Self {
        Self {
            renormalize: true,
            norm_tolerance: DEFAULT_NORM_TOLERANCE,
            check_recurrence: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KSpaceOutcome {
    pub trace: AmplitudeTrace,
    pub max_norm_drift: f64,
    /// δ applied on the atom, zero when not renormalising.
    pub counterterm: f64,
    pub final_state: FullState,
}

/// PV ∫_0^{K} 2ḡ²(k)/(ω_A − ω_k) dk summed over the grid modes, with ḡ² the
/// coupling averaged over the mirror standing wave (cos² → 1/2).
pub fn free_lamb_shift(geom: &WaveguideGeometry, atom: &AtomConfig, grid: &KGrid) -> Result<f64> {
    let tol = Tolerance::relative(1e-11).with_panels(16);
    let c = geom.c();
    let mut total = 0.0;
    for ch in &grid.channels {
        let idx = ch.index;
        let cutoff = geom.cutoff_frequency(idx);
        let s = geom.transverse_factor(atom, idx);
        let weight = atom.dipole_scale * cutoff * cutoff * s * s / PI;
        // 2ḡ² = weight/ω
        let k_top = ch.k_max();
        let direct = |k: f64| {
            let w = geom.dispersion(idx, k);
            weight / w / (atom.omega_a - w)
        };
        let k0 = if atom.omega_a > cutoff { geom.wavenumber_at(idx, atom.omega_a).ok() } else { None };
        let part = match k0 {
            Some(k0) if k0 < k_top => {
                // 1/(ω_A − ω) = (ω_A + ω)/(c²(k0 − k)(k0 + k))
                let q = |k: f64| {
                    let w = geom.dispersion(idx, k);
                    weight / w * (atom.omega_a + w) / (c * c * (k0 + k))
                };
                let q0 = q(k0);
                let sub = |k: f64| {
                    let d = k0 - k;
                    if d.abs() < 1e-9 * k0 {
                        // derivative limit of (q(k) − q0)/(k0 − k) = −q'(k0)
                        let h = 1e-5 * k0;
                        -(q(k0 + h) - q(k0 - h)) / (2.0 * h)
                    } else {
                        (q(k) - q0) / d
                    }
                };
                let left = integrate(sub, 0.0, k0, tol)?.value;
                let right = integrate(sub, k0, k_top, tol)?.value;
                left + right + q0 * (k0 / (k_top - k0)).ln()
            }
            _ => integrate(direct, 0.0, k_top, tol)?.value,
        };
        total += part;
    }
    Ok(total)
}

/// M(τ) = Σ w_k g_k² e^{−iω_k τ}, the reservoir memory seen by the atom.
pub fn memory_kernel(grid: &KGrid, tau: f64) -> Complex64 {
    grid.channels
        .iter()
        .flat_map(|c| c.weights.iter().zip(&c.coupling).zip(&c.omega))
        .map(|((w, g), om)| Complex64::from_polar(w * g * g, -om * tau))
        .sum()
}

/// Internal step: resolves both the decay and the fastest detuning.
pub fn default_step(atom: &AtomConfig, grid: &KGrid, gamma_total: f64) -> f64 {
    let max_detuning = grid
        .channels
        .iter()
        .flat_map(|c| c.omega.iter())
        .map(|w| (atom.omega_a - w).abs())
        .fold(0.0, f64::max);
    let by_rate = if gamma_total > 0.0 { 0.01 / gamma_total } else { f64::INFINITY };
    let by_detuning = if max_detuning > 0.0 { 0.08 / max_detuning } else { f64::INFINITY };
    let h = by_rate.min(by_detuning);
    if h.is_finite() {
        h
    } else {
        0.01
    }
}

/// Flattened arrays of the whole grid.
struct Flat {
    weights: Vec<f64>,
    coupling: Vec<f64>,
    detuning: Vec<f64>,
}

impl Flat {
    fn new(atom: &AtomConfig, grid: &KGrid) -> Self {
        let mut flat = Flat { weights: vec![], coupling: vec![], detuning: vec![] };
        for c in &grid.channels {
            flat.weights.extend(&c.weights);
            flat.coupling.extend(&c.coupling);
            flat.detuning.extend(c.omega.iter().map(|w| atom.omega_a - w));
        }
        flat
    }

    fn phases(&self, t: f64, out: &mut [Complex64]) {
        for (p, d) in out.iter_mut().zip(&self.detuning) {
            *p = Complex64::from_polar(1.0, d * t);
        }
    }

    /// Derivatives at one stage; `phase` holds e^{iΔt}.
    fn rhs(&self, shift: Complex64, y: Complex64, c: &[Complex64], phase: &[Complex64], dc: &mut [Complex64]) -> Complex64 {
        let mut sum = Complex64::new(0.0, 0.0);
        let minus_i_y = Complex64::new(0.0, -1.0) * y;
        for i in 0..c.len() {
            let g = self.coupling[i];
            sum += c[i] * phase[i] * (self.weights[i] * g);
            dc[i] = minus_i_y * phase[i].conj() * g;
        }
        shift * y - Complex64::new(0.0, 1.0) * sum
    }

    fn norm(&self, y: Complex64, c: &[Complex64]) -> f64 {
        y.norm_sqr() + self.weights.iter().zip(c).map(|(w, a)| w * a.norm_sqr()).sum::<f64>()
    }
}

/// Evolves from the excited atom with empty field, sampling ε̃ every
/// `sample_interval` up to `t_max`. `step` is the internal RK4 step (it is
/// shrunk so that it divides the sampling interval).
pub fn integrate_full(
    geom: &WaveguideGeometry,
    atom: &AtomConfig,
    grid: &KGrid,
    t_max: f64,
    sample_interval: f64,
    step: f64,
    options: KSpaceOptions,
) -> Result<KSpaceOutcome> {
    if !(t_max >= 0.0) || !(sample_interval > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidProblem(format!(
            "need t_max ≥ 0 and positive intervals, got t_max={t_max}, sample={sample_interval}, step={step}"
        )));
    }
    if grid.is_empty() {
        return Err(Error::InvalidProblem("empty k grid".into()));
    }
    if options.check_recurrence {
        let horizon = grid.recurrence_time(geom, atom) / RECURRENCE_MARGIN;
        if t_max > horizon * (1.0 + 1e-9) {
            return Err(Error::RecurrenceHorizonExceeded { t_max, horizon });
        }
    }
    let counterterm = if options.renormalize { free_lamb_shift(geom, atom, grid)? } else { 0.0 };
    let shift = Complex64::new(0.0, counterterm);

    let flat = Flat::new(atom, grid);
    let n = flat.weights.len();
    let substeps = (sample_interval / step).ceil().max(1.0) as usize;
    let h = sample_interval / substeps as f64;
    let samples = (t_max / sample_interval + 1e-9).floor() as usize;

    let zero = Complex64::new(0.0, 0.0);
    let mut y = Complex64::new(1.0, 0.0);
    let mut c = vec![zero; n];
    let mut p_now = vec![zero; n];
    let mut p_mid = vec![zero; n];
    let mut p_end = vec![zero; n];
    let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
    let mut tmp = vec![zero; n];

    let mut trace = AmplitudeTrace { times: vec![0.0], amplitudes: vec![y] };
    let mut max_drift: f64 = 0.0;
    flat.phases(0.0, &mut p_now);
    let mut step_index: u64 = 0;
    let total_steps = samples as u64 * substeps as u64;
    while step_index < total_steps {
        let t = step_index as f64 * h;
        let t_end = (step_index + 1) as f64 * h;
        flat.phases(t + 0.5 * h, &mut p_mid);
        flat.phases(t_end, &mut p_end);

        let a1 = flat.rhs(shift, y, &c, &p_now, &mut k1);
        for i in 0..n {
            tmp[i] = c[i] + k1[i] * (0.5 * h);
        }
        let a2 = flat.rhs(shift, y + a1 * (0.5 * h), &tmp, &p_mid, &mut k2);
        for i in 0..n {
            tmp[i] = c[i] + k2[i] * (0.5 * h);
        }
        let a3 = flat.rhs(shift, y + a2 * (0.5 * h), &tmp, &p_mid, &mut k3);
        for i in 0..n {
            tmp[i] = c[i] + k3[i] * h;
        }
        let a4 = flat.rhs(shift, y + a3 * h, &tmp, &p_end, &mut k4);
        y += (a1 + (a2 + a3) * 2.0 + a4) * (h / 6.0);
        for i in 0..n {
            c[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        std::mem::swap(&mut p_now, &mut p_end);
        step_index += 1;

        let drift = (flat.norm(y, &c) - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > options.norm_tolerance {
            return Err(Error::NormDrift { time: t_end, drift });
        }
        if step_index % substeps as u64 == 0 {
            trace.times.push((step_index / substeps as u64) as f64 * sample_interval);
            trace.amplitudes.push(y);
        }
    }

    let mut field = Vec::with_capacity(grid.channels.len());
    let mut offset = 0;
    for ch in &grid.channels {
        field.push(c[offset..offset + ch.k.len()].to_vec());
        offset += ch.k.len();
    }
    Ok(KSpaceOutcome {
        trace,
        max_norm_drift: max_drift,
        counterterm,
        final_state: FullState { atom: y, field },
    })
}

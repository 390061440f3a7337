//! Browser bindings. Each operation returns a flat `[x0, y0, x1, y1, ...]`
//! array ready for plotting; the `*_points` functions are the native
//! versions used by the tests.

use wasm_bindgen::prelude::*;

use wgqed_core::markov::{coupling_spectrum, golden_rule_rate};
use wgqed_core::model::{ModeIndex, DEFAULT_GUARD_BAND};
use wgqed_core::scenario::config::{AtomSpec, GeometryConfig, OutputConfig, SolverConfig};
use wgqed_core::scenario::{resolve, simulate, Engine, OmegaMode, ScenarioConfig, Z0Mode};

/// Step of the plotted traces, in Γ₁t.
const TRACE_STEP: f64 = 0.02;

fn band(two_mode: bool) -> OmegaMode {
    if two_mode {
        OmegaMode::MidbandBetween([[3, 1], [5, 1]])
    } else {
        OmegaMode::MidbandBetween([[1, 1], [3, 1]])
    }
}

fn scenario(a_over_b: f64, omega: OmegaMode, z0: Z0Mode, engine: Engine, t_max: f64) -> ScenarioConfig {
    ScenarioConfig {
        geometry: GeometryConfig { a_over_b },
        atom: AtomSpec {
            omega,
            z0,
            x0_frac: 0.5,
            y0_frac: 0.5,
            gamma1: None,
            max_gamma1: None,
            dipole_scale: None,
        },
        solver: SolverConfig { engine, step: Some(TRACE_STEP), t_max_gamma: t_max, max_channels: None },
        output: OutputConfig { directory: ".".into(), trace_name: "web".into() },
    }
}

/// (Γ₁t, |ε̃|²) for an atom whose first channel has the given Γτ₁ and phase.
pub fn decay_points(
    a_over_b: f64,
    two_mode: bool,
    gamma_tau1: f64,
    phase1: f64,
    engine: &str,
    t_max: f64,
) -> Result<Vec<f64>, String> {
    let engine: Engine = engine.parse().map_err(|e: wgqed_core::Error| e.to_string())?;
    if engine == Engine::Kspace {
        return Err("the k-space engine is too slow for the browser".into());
    }
    let c = scenario(a_over_b, band(two_mode), Z0Mode::ByGammaTau1 { gamma_tau1, phase1 }, engine, t_max);
    let (_, run) = simulate(&c).map_err(|e| e.to_string())?;
    Ok(run.trace.times.iter().zip(&run.trace.amplitudes).flat_map(|(t, a)| [*t, a.norm_sqr()]).collect())
}

/// (z₀/λ₁A, R/Γ₁) for z₀ across half a wavelength.
pub fn rate_points(a_over_b: f64, two_mode: bool, samples: usize) -> Result<Vec<f64>, String> {
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let f = 0.5 * i as f64 / (samples.max(2) - 1) as f64;
        let c = scenario(a_over_b, band(two_mode), Z0Mode::FractionOfLambda1a(f), Engine::Markov, 1.0);
        let r = resolve(&c).map_err(|e| e.to_string())?;
        let rate = golden_rule_rate(&r.geometry, &r.atom, DEFAULT_GUARD_BAND).map_err(|e| e.to_string())?.rate;
        out.extend([f, rate / r.gamma1]);
    }
    Ok(out)
}

/// (ω/Ω₁₁, 2πG(ω)/Γ₁) from just below the TM11 cutoff to above TM71. Points
/// that land on a cutoff are returned as NaN so the plot breaks there.
pub fn spectrum_points(a_over_b: f64, z0_fraction: f64, samples: usize) -> Result<Vec<f64>, String> {
    let c = scenario(a_over_b, band(false), Z0Mode::FractionOfLambda1a(z0_fraction), Engine::Markov, 1.0);
    let r = resolve(&c).map_err(|e| e.to_string())?;
    let unit = r.geometry.cutoff_frequency(ModeIndex { m: 1, n: 1 });
    let top = r.geometry.cutoff_frequency(ModeIndex { m: 7, n: 1 }) * 1.1 / unit;
    let mut out = Vec::with_capacity(2 * samples);
    for i in 0..samples {
        let x = 0.9 + (top - 0.9) * i as f64 / (samples.max(2) - 1) as f64;
        let g = coupling_spectrum(&r.geometry, &r.atom, x * unit).map_or(f64::NAN, |g| 2.0 * std::f64::consts::PI * g);
        out.extend([x, g / r.gamma1]);
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn decay_trace(
    a_over_b: f64,
    two_mode: bool,
    gamma_tau1: f64,
    phase1: f64,
    engine: &str,
    t_max: f64,
) -> Result<Vec<f64>, JsError> {
    decay_points(a_over_b, two_mode, gamma_tau1, phase1, engine, t_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rate_vs_z0(a_over_b: f64, two_mode: bool, samples: usize) -> Result<Vec<f64>, JsError> {
    rate_points(a_over_b, two_mode, samples).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn coupling_curve(a_over_b: f64, z0_fraction: f64, samples: usize) -> Result<Vec<f64>, JsError> {
    spectrum_points(a_over_b, z0_fraction, samples).map_err(|e| JsError::new(&e))
}

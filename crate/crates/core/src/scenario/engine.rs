//! Dispatch from a resolved scenario to one of the engines.
//!
//! Every engine returns ε̃ on the same output grid t = i·step, with time in
//! units of 1/Γ₁.

use serde::{Deserialize, Serialize};

use super::config::Engine;
use super::resolve::Resolved;
use crate::dde::{
    default_step, limiting_amplitude, series_single_mode, series_terms, series_two_mode_tau1_zero, solve_dde,
    AmplitudeTrace, DdeProblem, DelayRegime,
};
use crate::error::{Error, Result};
use crate::kspace::{self, integrate_full, KGrid, KSpaceOptions};
use crate::markov::golden_rule_rate;
use crate::model::DEFAULT_GUARD_BAND;
use crate::Complex64;

/// Numerical settings that were actually used, for the manifest.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridRecord {
    pub output_step_gamma: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub internal_step_gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dk: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lamb_counterterm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_norm_drift: Option<f64>,
    /// Golden-rule population decay rate of the retained channels, over Γ₁.
    pub golden_rule_rate_gamma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineRun {
    pub trace: AmplitudeTrace,
    pub grid: GridRecord,
}

/// Number of output intervals covering [0, t_max].
pub fn output_intervals(t_max: f64, step: f64) -> usize {
    (t_max / step - 1e-9).ceil().max(0.0) as usize
}

/// i·step, computed as i/(1/step) when that is exact so that a step of
/// 0.01 gives 16.99 rather than 16.990000000000002.
fn grid_times(n: usize, step: f64) -> Vec<f64> {
    let inverse = (1.0 / step).round();
    if inverse >= 1.0 && 1.0 / inverse == step {
        (0..=n).map(|i| i as f64 / inverse).collect()
    } else {
        (0..=n).map(|i| i as f64 * step).collect()
    }
}

fn not_applicable(engine: Engine, reason: impl Into<String>) -> Error {
    Error::EngineNotApplicable { engine: engine.name().into(), reason: reason.into() }
}

/// R/Γ₁ restricted to the retained channels.
fn retained_rate(resolved: &Resolved) -> Result<(f64, f64)> {
    if resolved.channels.is_empty() {
        return Ok((0.0, 0.0));
    }
    let estimate = golden_rule_rate(&resolved.geometry, &resolved.atom, DEFAULT_GUARD_BAND)?;
    let rate: f64 = estimate
        .per_channel
        .iter()
        .filter(|(idx, _)| resolved.channels.iter().any(|c| c.index == *idx))
        .map(|(_, r)| r)
        .sum();
    let shift: f64 = resolved.channels.iter().map(|c| c.rate * c.phase.sin()).sum();
    Ok((rate / resolved.gamma1, shift / resolved.gamma1))
}

pub fn run_engine(engine: Engine, resolved: &Resolved, t_max: f64, step: f64) -> Result<EngineRun> {
    let n = output_intervals(t_max, step);
    let times = grid_times(n, step);
    let channels = resolved.scaled_channels();
    let (rate, shift) = retained_rate(resolved)?;
    let mut grid = GridRecord {
        output_step_gamma: step,
        samples: n + 1,
        golden_rule_rate_gamma: rate,
        ..GridRecord::default()
    };

    let amplitudes: Vec<Complex64> = match engine {
        Engine::Markov => {
            let exponent = Complex64::new(0.5 * rate, shift);
            times.iter().map(|&t| (-exponent * t).exp()).collect()
        }
        Engine::NoMirror => times
            .iter()
            .map(|&t| limiting_amplitude(&channels, DelayRegime::AllDelaysInfinite, t))
            .collect(),
        Engine::Series => {
            let by_time = |f: &dyn Fn(f64) -> Complex64| times.iter().map(|&t| f(t)).collect::<Vec<_>>();
            match channels.as_slice() {
                [] => vec![Complex64::new(1.0, 0.0); times.len()],
                [c] => by_time(&|t| series_single_mode(c.rate, c.phase, c.delay, t, series_terms(c.delay, t))),
                [c1, c2] if c1.delay == 0.0 => by_time(&|t| {
                    series_two_mode_tau1_zero(c1.rate, c1.phase, c2.rate, c2.phase, c2.delay, t, series_terms(c2.delay, t))
                }),
                _ => {
                    return Err(not_applicable(
                        engine,
                        "closed-form series exist for one channel, or two with τ₁ = 0",
                    ))
                }
            }
        }
        Engine::Dde => {
            if channels.is_empty() {
                vec![Complex64::new(1.0, 0.0); times.len()]
            } else {
                let per_output = (step / default_step(&channels)).ceil().max(1.0) as usize;
                let h = step / per_output as f64;
                grid.internal_step_gamma = Some(h);
                let trace = solve_dde(&DdeProblem::new(channels, n as f64 * step).with_step(h))?;
                trace.amplitudes.into_iter().step_by(per_output).take(n + 1).collect()
            }
        }
        Engine::Kspace => {
            if resolved.channels.is_empty() {
                return Err(not_applicable(engine, "no resonant channel to build a k grid around"));
            }
            let unit = 1.0 / resolved.gamma1;
            let t_phys = n as f64 * step * unit;
            let kgrid = KGrid::for_channels(&resolved.geometry, &resolved.atom, &resolved.channels, t_phys)?;
            let gamma_total: f64 = resolved.channels.iter().map(|c| c.rate).sum();
            let h = kspace::default_step(&resolved.atom, &kgrid, gamma_total);
            let out = integrate_full(
                &resolved.geometry,
                &resolved.atom,
                &kgrid,
                t_phys,
                step * unit,
                h,
                KSpaceOptions::default(),
            )?;
            grid.internal_step_gamma = Some(step / (step * unit / h).ceil());
            grid.dk = Some(kgrid.dk);
            grid.k_points = Some(kgrid.len());
            grid.lamb_counterterm = Some(out.counterterm);
            grid.max_norm_drift = Some(out.max_norm_drift);
            out.trace.amplitudes
        }
    };
    debug_assert_eq!(amplitudes.len(), times.len());
    Ok(EngineRun { trace: AmplitudeTrace { times, amplitudes }, grid })
}

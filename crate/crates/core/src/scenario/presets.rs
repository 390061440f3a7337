//! Named multi-trace runs reproducing the standard figures.
//!
//! Every preset uses a = 2b and an atom centred in the cross-section.

use std::f64::consts::PI;
use std::path::Path;

use rayon::prelude::*;

use super::config::{AtomSpec, Engine, GeometryConfig, OmegaMode, OutputConfig, ScenarioConfig, SolverConfig, Z0Mode};
use super::{run_scenario, RunOutcome};
use crate::error::{Error, Result};

pub const PRESETS: [&str; 8] = ["fig2a", "fig2b", "fig3a", "fig3b", "fig4a", "fig4b", "fig5a", "fig5b"];

const BAND_11_31: OmegaMode = OmegaMode::MidbandBetween([[1, 1], [3, 1]]);
const BAND_31_51: OmegaMode = OmegaMode::MidbandBetween([[3, 1], [5, 1]]);

/// Phases of the feedback traces and their name suffixes.
const PHASES: [(f64, &str); 3] = [(PI / 2.0, "phi_half_pi"), (PI, "phi_pi"), (0.0, "phi_0")];

fn base(name: String, omega: OmegaMode, z0: Z0Mode, engine: Engine, t_max: f64) -> ScenarioConfig {
    ScenarioConfig {
        geometry: GeometryConfig { a_over_b: 2.0 },
        atom: AtomSpec {
            omega,
            z0,
            x0_frac: 0.5,
            y0_frac: 0.5,
            gamma1: None,
            max_gamma1: None,
            dipole_scale: None,
        },
        solver: SolverConfig { engine, step: None, t_max_gamma: t_max, max_channels: None },
        output: OutputConfig { directory: ".".into(), trace_name: name },
    }
}

fn feedback_set(preset: &str, omega: OmegaMode, gamma_tau1: f64, t_max: f64, with_reference: bool) -> Vec<ScenarioConfig> {
    let mut out: Vec<ScenarioConfig> = PHASES
        .iter()
        .map(|&(phase1, suffix)| {
            base(
                format!("{preset}_{suffix}"),
                omega,
                Z0Mode::ByGammaTau1 { gamma_tau1, phase1 },
                Engine::Dde,
                t_max,
            )
        })
        .collect();
    if with_reference {
        let mut reference = out[0].clone();
        reference.output.trace_name = format!("{preset}_no_mirror");
        reference.solver.engine = Engine::NoMirror;
        out.push(reference);
    }
    out
}

/// Configurations of a preset, all writing to the current directory.
pub fn preset(name: &str) -> Result<Vec<ScenarioConfig>> {
    let configs = match name {
        "fig2a" => [(0.0, "z0_0"), (0.125, "z0_eighth"), (0.25, "z0_quarter")]
            .iter()
            .map(|&(f, suffix)| {
                base(format!("fig2a_{suffix}"), BAND_11_31, Z0Mode::FractionOfLambda1a(f), Engine::Markov, 5.0)
            })
            .collect(),
        "fig2b" => {
            let all = base("fig2b_all_modes".into(), BAND_31_51, Z0Mode::FractionOfLambda1a(0.25), Engine::Markov, 5.0);
            let mut tm11 = all.clone();
            tm11.output.trace_name = "fig2b_tm11_only".into();
            tm11.solver.max_channels = Some(1);
            vec![tm11, all]
        }
        "fig3a" => feedback_set(name, BAND_11_31, 0.1, 10.0, true),
        "fig3b" => feedback_set(name, BAND_11_31, 1.0, 10.0, true),
        "fig4a" => feedback_set(name, BAND_31_51, 0.1, 10.0, true),
        "fig4b" => feedback_set(name, BAND_31_51, 1.0, 10.0, true),
        "fig5a" => feedback_set(name, BAND_11_31, 10.0, 40.0, false),
        "fig5b" => feedback_set(name, BAND_31_51, 10.0, 40.0, false),
        other => {
            return Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(configs)
}

/// Runs every trace of a preset into `directory`, in parallel; results come
/// back in preset order.
pub fn run_preset(name: &str, directory: &Path) -> Result<Vec<RunOutcome>> {
    let dir = directory.to_str().ok_or_else(|| Error::Config("output directory is not UTF-8".into()))?;
    let mut configs = preset(name)?;
    for c in &mut configs {
        c.output.directory = dir.to_string();
    }
    configs.par_iter().map(run_scenario).collect()
}

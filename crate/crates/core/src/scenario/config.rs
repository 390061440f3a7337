//! Run configuration, read from TOML.
//!
//! ```toml
//! geometry.a_over_b = 2.0
//! atom.omega.midband_between = [[1, 1], [3, 1]]
//! atom.z0.by_gamma_tau1 = { gamma_tau1 = 1.0, phase1 = 1.5707963267948966 }
//! atom.x0_frac = 0.5
//! atom.y0_frac = 0.5
//! solver.engine = "dde"
//! solver.t_max_gamma = 10.0
//! output.directory = "out"
//! output.trace_name = "trace"
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModeIndex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: GeometryConfig,
    pub atom: AtomSpec,
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub a_over_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaMode {
    /// Midpoint between the cutoffs of two modes, each given as [m, n].
    MidbandBetween([[u32; 2]; 2]),
    Absolute(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Z0Mode {
    /// z₀ as a multiple of the emission wavelength of the first channel.
    FractionOfLambda1a(f64),
    Absolute(f64),
    /// z₀ and the dipole strength chosen together so that channel 1 has the
    /// requested Γτ₁ and round-trip phase (mod 2π).
    ByGammaTau1 { gamma_tau1: f64, phase1: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub omega: OmegaMode,
    pub z0: Z0Mode,
    #[serde(default = "half")]
    pub x0_frac: f64,
    #[serde(default = "half")]
    pub y0_frac: f64,
    /// Γ₁ for the fraction and absolute z₀ modes (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    /// Largest Γ₁ accepted by the by_gamma_tau1 mode (default 0.003).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gamma1: Option<f64>,
    /// Explicit κ; overrides gamma1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dipole_scale: Option<f64>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Dde,
    Kspace,
    Markov,
    Series,
    /// Every delay sent to infinity: decay into an unterminated guide.
    NoMirror,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Dde => "dde",
            Engine::Kspace => "kspace",
            Engine::Markov => "markov",
            Engine::Series => "series",
            Engine::NoMirror => "no_mirror",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "dde" => Ok(Engine::Dde),
            "kspace" => Ok(Engine::Kspace),
            "markov" => Ok(Engine::Markov),
            "series" => Ok(Engine::Series),
            "no_mirror" => Ok(Engine::NoMirror),
            other => Err(Error::Config(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub engine: Engine,
    /// Output spacing in Γ₁t units (default 0.01).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    pub t_max_gamma: f64,
    /// Keep only the first n channels (ascending cutoff).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_channels: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_trace")]
    pub trace_name: String,
}

fn default_directory() -> String {
    ".".into()
}

fn default_trace() -> String {
    "trace".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: default_directory(), trace_name: default_trace() }
    }
}

pub const DEFAULT_OUTPUT_STEP: f64 = 0.01;
pub const DEFAULT_GAMMA1: f64 = 1.0;
pub const DEFAULT_MAX_GAMMA1: f64 = 0.003;

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be positive, got {v}")))
    }
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }

    pub fn output_step(&self) -> f64 {
        self.solver.step.unwrap_or(DEFAULT_OUTPUT_STEP)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.geometry.a_over_b;
        if !(g.is_finite() && g >= 1.0) {
            return Err(Error::Config(format!("a_over_b must be at least 1, got {g}")));
        }
        let atom = &self.atom;
        match atom.omega {
            OmegaMode::MidbandBetween(pair) => {
                for [m, n] in pair {
                    ModeIndex::new(m, n).map_err(|e| Error::Config(e.to_string()))?;
                }
            }
            OmegaMode::Absolute(w) => positive("atom.omega.absolute", w)?,
        }
        match atom.z0 {
            Z0Mode::FractionOfLambda1a(f) | Z0Mode::Absolute(f) => {
                if !(f.is_finite() && f >= 0.0) {
                    return Err(Error::Config(format!("z0 must be non-negative, got {f}")));
                }
            }
            Z0Mode::ByGammaTau1 { gamma_tau1, phase1 } => {
                positive("atom.z0.by_gamma_tau1.gamma_tau1", gamma_tau1)?;
                if !phase1.is_finite() {
                    return Err(Error::Config("phase1 must be finite".into()));
                }
                if atom.gamma1.is_some() || atom.dipole_scale.is_some() {
                    return Err(Error::Config(
                        "by_gamma_tau1 fixes the dipole strength; drop gamma1 and dipole_scale".into(),
                    ));
                }
            }
        }
        fraction("atom.x0_frac", atom.x0_frac)?;
        fraction("atom.y0_frac", atom.y0_frac)?;
        for (name, v) in [
            ("atom.gamma1", atom.gamma1),
            ("atom.max_gamma1", atom.max_gamma1),
            ("atom.dipole_scale", atom.dipole_scale),
            ("solver.step", self.solver.step),
        ] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        positive("solver.t_max_gamma", self.solver.t_max_gamma)?;
        if self.solver.max_channels == Some(0) {
            return Err(Error::Config("solver.max_channels must be at least 1".into()));
        }
        if self.output.trace_name.is_empty() || self.output.trace_name.contains(['/', '\\']) {
            return Err(Error::Config(format!("bad trace name `{}`", self.output.trace_name)));
        }
        Ok(())
    }
}

//! Configured runs: resolve, dispatch, write CSV and a manifest.
//!
//! A run writes `<trace>.csv` with the columns `t_gamma,re,im,abs,prob`
//! and `<trace>.manifest.toml` next to it. The manifest embeds the full
//! configuration, so `run` accepts it in place of a config file and
//! reproduces the CSV byte for byte.

pub mod config;
pub mod engine;
pub mod presets;
pub mod resolve;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{Engine, OmegaMode, ScenarioConfig, Z0Mode};
pub use engine::{run_engine, EngineRun, GridRecord};
pub use resolve::{resolve, ChannelRecord, Resolved};

use crate::dde::AmplitudeTrace;
use crate::error::{Error, Result};

pub const ENGINE_VERSION: &str = concat!("wgqed ", env!("CARGO_PKG_VERSION"));
pub const CSV_HEADER: &str = "t_gamma,re,im,abs,prob";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedRecord {
    pub omega_a: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub dipole_scale: f64,
    pub gamma1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding: Option<u64>,
    pub channels: Vec<ChannelRecord>,
}

impl From<&Resolved> for ResolvedRecord {
    fn from(r: &Resolved) -> Self {
        Self {
            omega_a: r.atom.omega_a,
            x0: r.atom.x0,
            y0: r.atom.y0,
            z0: r.atom.z0,
            dipole_scale: r.atom.dipole_scale,
            gamma1: r.gamma1,
            lambda1a: r.lambda1a,
            winding: r.winding,
            channels: r.channels.iter().map(|c| ChannelRecord::from((c, r.gamma1))).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub engine_version: String,
    pub engine: Engine,
    pub config_digest: String,
    pub outputs: Vec<String>,
    pub config: ScenarioConfig,
    pub resolved: ResolvedRecord,
    pub grid: GridRecord,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest always serialises")
    }
}

/// Hex SHA-256 of the canonical TOML form of the configuration.
pub fn config_digest(config: &ScenarioConfig) -> String {
    Sha256::digest(config.to_toml().as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Reads a configuration, or the configuration embedded in a manifest.
pub fn load_config(text: &str) -> Result<ScenarioConfig> {
    let table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    if table.contains_key("engine_version") {
        let embedded = table
            .get("config")
            .ok_or_else(|| Error::Config("manifest has no [config] table".into()))?
            .clone();
        let config: ScenarioConfig = embedded.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    } else {
        ScenarioConfig::from_toml(text)
    }
}

/// Shortest decimal that parses back to `x`; exponent form outside
/// [1e-5, 1e16) so tiny amplitudes stay short.
pub fn format_float(x: f64) -> String {
    let m = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&m) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn csv_string(trace: &AmplitudeTrace) -> String {
    let mut out = String::with_capacity(96 * trace.len() + CSV_HEADER.len() + 1);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (t, a) in trace.times.iter().zip(&trace.amplitudes) {
        let row = [*t, a.re, a.im, a.norm(), a.norm_sqr()].map(format_float);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Result of one run; the files are already on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub trace: AmplitudeTrace,
    pub csv_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Resolves and runs without touching the filesystem.
pub fn simulate(config: &ScenarioConfig) -> Result<(Resolved, EngineRun)> {
    let context = format!("scenario `{}`", config.output.trace_name);
    let resolved = resolve(config).map_err(|e| e.in_scenario(&context))?;
    let run = run_engine(config.solver.engine, &resolved, config.solver.t_max_gamma, config.output_step())
        .map_err(|e| e.in_scenario(&context))?;
    Ok((resolved, run))
}

pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome> {
    let (resolved, run) = simulate(config)?;
    let dir = Path::new(&config.output.directory);
    fs::create_dir_all(dir)?;
    let name = &config.output.trace_name;
    let csv_name = format!("{name}.csv");
    let csv_path = dir.join(&csv_name);
    let manifest_path = dir.join(format!("{name}.manifest.toml"));
    let manifest = RunManifest {
        engine_version: ENGINE_VERSION.into(),
        engine: config.solver.engine,
        config_digest: config_digest(config),
        outputs: vec![csv_name],
        config: config.clone(),
        resolved: ResolvedRecord::from(&resolved),
        grid: run.grid,
    };
    fs::write(&csv_path, csv_string(&run.trace))?;
    fs::write(&manifest_path, manifest.to_toml())?;
    Ok(RunOutcome { manifest, trace: run.trace, csv_path, manifest_path })
}

/// Deviation between two engines on the same grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Deviation {
    pub first: Engine,
    pub second: Engine,
    pub max_abs: f64,
    pub mean_abs: f64,
    pub max_modulus: f64,
    pub mean_modulus: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub rows: Vec<Deviation>,
    pub path: PathBuf,
}

pub fn deviation(first: Engine, a: &AmplitudeTrace, second: Engine, b: &AmplitudeTrace) -> Deviation {
    let n = a.len().min(b.len()).max(1) as f64;
    let pairs = || a.amplitudes.iter().zip(&b.amplitudes);
    let abs: Vec<f64> = pairs().map(|(x, y)| (x - y).norm()).collect();
    let modulus: Vec<f64> = pairs().map(|(x, y)| (x.norm() - y.norm()).abs()).collect();
    Deviation {
        first,
        second,
        max_abs: abs.iter().copied().fold(0.0, f64::max),
        mean_abs: abs.iter().sum::<f64>() / n,
        max_modulus: modulus.iter().copied().fold(0.0, f64::max),
        mean_modulus: modulus.iter().sum::<f64>() / n,
    }
}

/// Runs every engine on the configuration and tabulates all pairwise
/// deviations into `<trace>_compare.csv`.
pub fn compare_engines(config: &ScenarioConfig, engines: &[Engine]) -> Result<DeviationReport> {
    if engines.len() < 2 {
        return Err(Error::Config("compare needs at least two engines".into()));
    }
    let traces = engines
        .par_iter()
        .map(|&engine| {
            let mut c = config.clone();
            c.solver.engine = engine;
            simulate(&c).map(|(_, run)| run.trace)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = vec![];
    for i in 0..engines.len() {
        for j in i + 1..engines.len() {
            rows.push(deviation(engines[i], &traces[i], engines[j], &traces[j]));
        }
    }
    let mut csv = String::from("first,second,max_abs,mean_abs,max_modulus,mean_modulus\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.first.name(),
            r.second.name(),
            r.max_abs,
            r.mean_abs,
            r.max_modulus,
            r.mean_modulus
        );
    }
    let dir = Path::new(&config.output.directory);
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}_compare.csv", config.output.trace_name));
    fs::write(&path, csv)?;
    Ok(DeviationReport { rows, path })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    /// z₀ in the units of the configured z₀ mode.
    Z0,
    OmegaA,
    GammaTau1,
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z0" => Ok(SweepParam::Z0),
            "omega_a" => Ok(SweepParam::OmegaA),
            "gamma_tau1" => Ok(SweepParam::GammaTau1),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Z0 => "z0",
            SweepParam::OmegaA => "omega_a",
            SweepParam::GammaTau1 => "gamma_tau1",
        }
    }

    fn apply(self, config: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut c = config.clone();
        match (self, &mut c.atom.z0) {
            (SweepParam::Z0, Z0Mode::FractionOfLambda1a(z) | Z0Mode::Absolute(z)) => *z = value,
            (SweepParam::Z0, Z0Mode::ByGammaTau1 { .. }) => {
                return Err(Error::Config("z0 sweep needs a fraction or absolute z0 mode; sweep gamma_tau1 instead".into()))
            }
            (SweepParam::GammaTau1, Z0Mode::ByGammaTau1 { gamma_tau1, .. }) => *gamma_tau1 = value,
            (SweepParam::GammaTau1, _) => {
                return Err(Error::Config("gamma_tau1 sweep needs atom.z0.by_gamma_tau1".into()))
            }
            (SweepParam::OmegaA, _) => c.atom.omega = OmegaMode::Absolute(value),
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub golden_rule_rate_gamma: f64,
    pub final_prob: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub points: Vec<SweepPoint>,
    pub manifests: Vec<RunManifest>,
    pub summary_path: PathBuf,
}

/// One run per value into the configured directory, then `summary.csv`
/// with `value,golden_rule_rate_gamma,final_prob`.
pub fn sweep(config: &ScenarioConfig, param: SweepParam, values: &[f64]) -> Result<SweepOutcome> {
    config.validate()?;
    let configs = values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let mut c = param.apply(config, v)?;
            c.output.trace_name = format!("{}_{}_{i:03}", config.output.trace_name, param.name());
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let outcomes = configs.par_iter().map(run_scenario).collect::<Result<Vec<_>>>()?;

    let points: Vec<SweepPoint> = values
        .iter()
        .zip(&outcomes)
        .map(|(&value, o)| SweepPoint {
            value,
            golden_rule_rate_gamma: o.manifest.grid.golden_rule_rate_gamma,
            final_prob: o.trace.amplitudes.last().map_or(1.0, |a| a.norm_sqr()),
        })
        .collect();
    let mut csv = String::from("value,golden_rule_rate_gamma,final_prob\n");
    for p in &points {
        let _ = writeln!(csv, "{},{},{}", p.value, p.golden_rule_rate_gamma, p.final_prob);
    }
    let dir = Path::new(&config.output.directory);
    fs::create_dir_all(dir)?;
    let summary_path = dir.join("summary.csv");
    fs::write(&summary_path, csv)?;
    Ok(SweepOutcome {
        points,
        manifests: outcomes.into_iter().map(|o| o.manifest).collect(),
        summary_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_header_and_shortest_floats() {
        let trace = AmplitudeTrace {
            times: vec![0.0, 0.5],
            amplitudes: vec![crate::Complex64::new(1.0, 0.0), crate::Complex64::new(0.1, -0.2)],
        };
        let csv = csv_string(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(lines.next(), Some("0,1,0,1,1"));
        assert!(lines.next().unwrap().starts_with("0.5,0.1,-0.2,"));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.0, 1.0, -0.25, 1.889476785547077e-21, 3.5e-6, 123456.789, 1e17, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            assert!(s.len() < 26, "{s}");
        }
    }

    #[test]
    fn digest_is_stable_hex() {
        let c = presets::preset("fig3a").unwrap().remove(0);
        let d = config_digest(&c);
        assert_eq!(d.len(), 64);
        assert_eq!(d, config_digest(&c.clone()));
    }
}

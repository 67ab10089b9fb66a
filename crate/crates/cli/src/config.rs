//! Run configuration: a TOML document with one section per subsystem.
//!
//! Every field has an embedded default, so an empty file is a valid
//! configuration. [`RunConfig::resolved`] fills in the defaults that depend
//! on other fields and is what gets echoed into the outputs.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use zlip_core::model::{DomainId, ModelParams, WalkMode};
use zlip_core::mpc::{AblationMode, MpcConfig};
use zlip_core::orbit::{GaitCommand, StanceSide};
use zlip_core::sim::{Push, Scenario, Thresholds};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub z0: f64,
    pub g: f64,
    pub rho: f64,
    pub mass: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        ModelSection { z0: p.z0, g: p.g, rho: p.rho, mass: p.mass }
    }
}

/// Durations left out default to the usual split of the selected mode:
/// 0.3 s FA with no UA for flat-footed walking, 0.2 s each otherwise, and
/// 0.1 s of double support for both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaitSection {
    pub mode: WalkMode,
    pub v_x: f64,
    pub v_y: f64,
    pub step_width: f64,
    pub t_fa: Option<f64>,
    pub t_ua: Option<f64>,
    pub t_oa: Option<f64>,
}

impl Default for GaitSection {
    fn default() -> Self {
        GaitSection {
            mode: WalkMode::FlatFooted,
            v_x: 0.0,
            v_y: 0.0,
            step_width: GaitCommand::default().step_width,
            t_fa: None,
            t_ua: None,
            t_oa: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    pub duration: f64,
    pub replan_rate: f64,
    pub log_rate: f64,
    pub seed: u64,
    pub ablation: AblationMode,
    pub pushes: Vec<Push>,
    pub thresholds: Thresholds,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let sc = Scenario::new(GaitCommand::default(), ModelParams::default(), 10.0);
        ScenarioSection {
            duration: sc.duration,
            replan_rate: sc.replan_rate,
            log_rate: sc.log_rate,
            seed: sc.seed,
            ablation: sc.ablation,
            pushes: Vec::new(),
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown output format '{other}' (expected csv, json or svg)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: None, formats: vec![Format::Csv, Format::Json] }
    }
}

/// Planner input for `solve`: a state on the reference orbit, shifted by the
/// given CoM position and velocity offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSection {
    pub domain: DomainId,
    pub t_passed: f64,
    pub stance: StanceSide,
    pub dp: [f64; 2],
    pub dv: [f64; 2],
    /// Number of identical solves used for the timing statistics.
    pub repeats: usize,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            domain: DomainId::Fa,
            t_passed: 0.0,
            stance: StanceSide::Left,
            dp: [0.0; 2],
            dv: [0.0; 2],
            repeats: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub direction: [f64; 2],
    pub magnitudes: Vec<f64>,
    pub modes: Vec<AblationMode>,
    pub push_start: f64,
    pub push_duration: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            direction: [0.0, 1.0],
            magnitudes: (1..=6).map(|k| 50.0 * k as f64).collect(),
            modes: AblationMode::ALL.to_vec(),
            push_start: zlip_core::sim::sweep::DEFAULT_PUSH_START,
            push_duration: zlip_core::sim::sweep::DEFAULT_PUSH_DURATION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelSection,
    pub gait: GaitSection,
    pub mpc: MpcConfig,
    pub scenario: ScenarioSection,
    pub output: OutputSection,
    pub solve: SolveSection,
    pub sweep: SweepSection,
}

impl RunConfig {
    /// Reads `path` (if any), applies `key=value` overrides and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {}", p.display(), e.message())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            // toml appends "in `section`" on a second line; the path says that already
            let inner = e.into_inner().to_string();
            let msg = inner.lines().next().unwrap_or_default().trim().to_string();
            if path == "." {
                CliError::Config(msg)
            } else {
                CliError::Config(format!("{path}: {msg}"))
            }
        })?;
        let cfg = cfg.resolved();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Copy with every defaulted duration written out.
    pub fn resolved(mut self) -> RunConfig {
        let g = &mut self.gait;
        let (fa, ua) = match g.mode {
            WalkMode::FlatFooted => (0.3, 0.0),
            WalkMode::MultiDomain => (0.2, 0.2),
        };
        g.t_fa.get_or_insert(fa);
        g.t_ua.get_or_insert(ua);
        g.t_oa.get_or_insert(0.1);
        self
    }

    pub fn params(&self) -> ModelParams {
        let m = &self.model;
        ModelParams { z0: m.z0, g: m.g, rho: m.rho, mass: m.mass }
    }

    pub fn command(&self) -> GaitCommand {
        let g = &self.gait;
        GaitCommand {
            v_ref_x: g.v_x,
            v_ref_y: g.v_y,
            step_width: g.step_width,
            t_fa: g.t_fa.unwrap_or(0.0),
            t_ua: g.t_ua.unwrap_or(0.0),
            t_oa: g.t_oa.unwrap_or(0.0),
            mode: g.mode,
        }
    }

    pub fn scenario(&self) -> Scenario {
        let s = &self.scenario;
        Scenario {
            command: self.command(),
            params: self.params(),
            pushes: s.pushes.clone(),
            mpc: self.mpc,
            ablation: s.ablation,
            duration: s.duration,
            replan_rate: s.replan_rate,
            log_rate: s.log_rate,
            seed: s.seed,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }

    fn validate(&self) -> Result<(), CliError> {
        let section = |name: &str, r: zlip_core::Result<()>| r.map_err(|e| CliError::Config(format!("[{name}] {e}")));
        section("model", self.params().validate())?;
        section("gait", self.command().validate())?;
        section("mpc", self.mpc.validate())?;
        section("scenario", self.scenario().validate())?;
        let thr = &self.scenario.thresholds;
        if !(thr.velocity_tol > 0.0 && thr.hull_tol >= 0.0 && thr.final_steps >= 1) {
            return Err(CliError::Config("[scenario.thresholds] tolerances must be positive".into()));
        }
        let s = &self.solve;
        if !(s.t_passed.is_finite() && s.t_passed >= 0.0) {
            return Err(CliError::Config("[solve] t_passed must be >= 0".into()));
        }
        if s.repeats == 0 {
            return Err(CliError::Config("[solve] repeats must be >= 1".into()));
        }
        if s.dp.iter().chain(&s.dv).any(|v| !v.is_finite()) {
            return Err(CliError::Config("[solve] dp and dv must be finite".into()));
        }
        let w = &self.sweep;
        if w.magnitudes.is_empty() || w.modes.is_empty() {
            return Err(CliError::Config("[sweep] magnitudes and modes must not be empty".into()));
        }
        if w.magnitudes.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(CliError::Config("[sweep] magnitudes must be finite and >= 0".into()));
        }
        if !(w.direction[0].hypot(w.direction[1]) > 0.0) {
            return Err(CliError::Config("[sweep] direction must be nonzero".into()));
        }
        let end = w.push_start + w.push_duration;
        if !(w.push_start >= 0.0 && w.push_duration >= 0.0 && end <= self.scenario.duration) {
            return Err(CliError::Config("[sweep] push_start/push_duration must lie inside the scenario".into()));
        }
        if self.output.formats.is_empty() {
            return Err(CliError::Config("[output] formats must not be empty".into()));
        }
        Ok(())
    }
}

/// Sets a dotted key. The value is read as a TOML value and falls back to a
/// plain string, so `gait.mode=multi-domain` works without quotes.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), CliError> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override '{spec}' is not key=value")))?;
    let key = key.trim();
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("override key '{key}' is malformed")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override key '{key}': '{part}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

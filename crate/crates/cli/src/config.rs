//! Scenario configuration files.
//!
//! A scenario is a TOML document with one table per pipeline stage. Every
//! field is checked at load time and problems are reported with the file
//! and line they come from.

use std::path::Path;

use serde::{Deserialize, Serialize};

use abwave_core::analysis::AngleUnit;
use abwave_core::analytic::FluxStrength;
use abwave_core::propagator::{Execution, KernelPhase, Normalization, RegimeHint};
use abwave_core::wavefield::{BarAxis, BeamParams, MIN_GRID_POINTS};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    #[serde(rename = "path_integral_1d")]
    PathIntegral1d,
    #[serde(rename = "path_integral_2d")]
    PathIntegral2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleUnitCfg {
    /// Dimensionless `w theta`.
    #[default]
    Scaled,
    Rad,
}

impl AngleUnitCfg {
    pub fn unit(self) -> AngleUnit {
        match self {
            AngleUnitCfg::Scaled => AngleUnit::Scaled,
            AngleUnitCfg::Rad => AngleUnit::Radians,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisCfg {
    #[default]
    X,
    Y,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteCfg {
    Direct,
    Fraunhofer,
    #[default]
    Auto,
}

impl RouteCfg {
    pub fn hint(self) -> RegimeHint {
        match self {
            RouteCfg::Direct => RegimeHint::Near,
            RouteCfg::Fraunhofer => RegimeHint::Far,
            RouteCfg::Auto => RegimeHint::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCfg {
    #[default]
    TwoPi,
    Pi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormCfg {
    Raw,
    Physical,
    UnitTotalProbability,
    #[default]
    UnitPeak,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionCfg {
    Serial,
    #[default]
    Parallel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    pub alpha: Option<f64>,
    /// Physical flux in weber.
    pub phi_weber: Option<f64>,
    /// Flux bar width in metres; 0 is an ideal line.
    #[serde(default)]
    pub bar_width: f64,
    #[serde(default)]
    pub bar_opaque: bool,
    #[serde(default)]
    pub bar_axis: AxisCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub kinetic_energy_ev: f64,
    /// Packet width in metres. Give either this or `w`.
    pub beta: Option<f64>,
    pub w: Option<f64>,
    #[serde(default)]
    pub coherence_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// Source samples per axis.
    pub n: usize,
    /// Source full width per axis, metres.
    pub extent: f64,
    /// 2-D far field: FFT length over source length.
    #[serde(default = "default_pad")]
    pub pad: usize,
    /// 1-D target samples.
    pub target_n: Option<usize>,
    /// Far-field half-window in `angle_unit`.
    pub target_half_angle: Option<f64>,
    /// Near-plane half-window in metres.
    pub target_half_width: Option<f64>,
    #[serde(default)]
    pub angle_unit: AngleUnitCfg,
}

fn default_pad() -> usize {
    2
}

fn default_distance() -> f64 {
    1.0
}

fn default_fraction() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    /// Flux line to detector, metres.
    #[serde(default = "default_distance")]
    pub distance: f64,
    /// Fraction of `distance` at which the field is evaluated; below 1
    /// selects the near-plane quantum-potential output.
    #[serde(default = "default_fraction")]
    pub fraction: f64,
    #[serde(default)]
    pub route: RouteCfg,
    /// Optional camera length for a detector-coordinate column, metres.
    pub camera_length: Option<f64>,
}

impl Default for GeometrySection {
    fn default() -> Self {
        GeometrySection {
            distance: default_distance(),
            fraction: default_fraction(),
            route: RouteCfg::default(),
            camera_length: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceSection {
    /// Angular r.m.s. of the incoherent source, in `angle_unit`.
    #[serde(default)]
    pub source_rms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropagatorSection {
    #[serde(default)]
    pub kernel_phase_factor: KernelCfg,
    #[serde(default)]
    pub normalization: NormCfg,
    #[serde(default)]
    pub execution: ExecutionCfg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApertureSection {
    pub radius: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub svg: bool,
    /// Rerun at half the source resolution and report the change.
    #[serde(default = "yes")]
    pub convergence: bool,
    /// Half-window of the written profile, in `angle_unit` (far field).
    pub display_half_angle: Option<f64>,
}

impl Default for OutputsSection {
    fn default() -> Self {
        OutputsSection {
            csv: true,
            svg: true,
            convergence: true,
            display_half_angle: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub mode: Mode,
    pub flux: FluxSection,
    pub beam: BeamSection,
    pub grid: GridSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub coherence: CoherenceSection,
    #[serde(default)]
    pub propagator: PropagatorSection,
    pub aperture: Option<ApertureSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
}

/// Parsed configuration together with its source text, for line lookups.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub text: String,
    pub origin: String,
}

impl ScenarioConfig {
    pub fn flux_strength(&self) -> Result<FluxStrength, String> {
        match (self.flux.alpha, self.flux.phi_weber) {
            (Some(a), Some(p)) => FluxStrength::with_weber(a, p).map_err(|e| e.to_string()),
            (Some(a), None) => FluxStrength::new(a).map_err(|e| e.to_string()),
            (None, Some(p)) => FluxStrength::from_weber(p).map_err(|e| e.to_string()),
            (None, None) => Err("give `alpha` or `phi_weber`".into()),
        }
    }

    pub fn beam_params(&self) -> Result<BeamParams, String> {
        let b = &self.beam;
        let beta = match (b.beta, b.w) {
            (Some(beta), None) => beta,
            (None, Some(w)) => {
                if !(w.is_finite() && w > 0.0) {
                    return Err(format!("w must be finite and > 0, got {w}"));
                }
                BeamParams::beta_for_w(b.kinetic_energy_ev, w).map_err(|e| e.to_string())?
            }
            (Some(_), Some(_)) => return Err("give either `beta` or `w`, not both".into()),
            (None, None) => return Err("give `beta` (metres) or `w`".into()),
        };
        BeamParams::new(b.kinetic_energy_ev, beta, b.coherence_width).map_err(|e| e.to_string())
    }

    pub fn kernel(&self) -> KernelPhase {
        match self.propagator.kernel_phase_factor {
            KernelCfg::TwoPi => KernelPhase::TwoPi,
            KernelCfg::Pi => KernelPhase::Pi,
        }
    }

    pub fn normalization(&self) -> Normalization {
        match self.propagator.normalization {
            NormCfg::Raw => Normalization::Raw,
            NormCfg::Physical => Normalization::Physical,
            NormCfg::UnitTotalProbability => Normalization::UnitTotalProbability,
            NormCfg::UnitPeak => Normalization::UnitPeak,
        }
    }

    pub fn execution(&self) -> Execution {
        match self.propagator.execution {
            ExecutionCfg::Serial => Execution::Serial,
            ExecutionCfg::Parallel => Execution::Parallel,
        }
    }

    pub fn bar_axis(&self) -> BarAxis {
        match self.flux.bar_axis {
            AxisCfg::X => BarAxis::AlongX,
            AxisCfg::Y => BarAxis::AlongY,
        }
    }

    /// True for the near-plane (quantum potential) scenario.
    pub fn is_near_plane(&self) -> bool {
        self.mode == Mode::PathIntegral1d && self.geometry.fraction < 1.0
    }
}

/// 1-based line of `key` inside `[section]` (`""` for the top level).
pub fn locate(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut section_line = None;
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            if current == section {
                section_line = Some(i + 1);
            }
            continue;
        }
        if current != section {
            continue;
        }
        if let Some(rest) = t.strip_prefix(key) {
            if rest.trim_start().starts_with('=') {
                return Some(i + 1);
            }
        }
    }
    section_line
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses a configuration document. Syntax and type errors come back with
/// the line of the offending token.
pub fn parse(text: &str, origin: &str) -> Result<LoadedConfig, CliError> {
    let config: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config {
        origin: origin.to_string(),
        line: e.span().map(|s| line_of(text, s.start)),
        field: "toml".into(),
        message: e.message().trim().to_string(),
    })?;
    Ok(LoadedConfig {
        config,
        text: text.to_string(),
        origin: origin.to_string(),
    })
}

pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text, &path.display().to_string())
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

impl LoadedConfig {
    fn issue(&self, section: &str, key: &str, message: impl Into<String>) -> CliError {
        let field = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        CliError::Config {
            origin: self.origin.clone(),
            line: locate(&self.text, section, key),
            field,
            message: message.into(),
        }
    }

    /// Every field-level problem, in document order of checks. Empty means
    /// the configuration is valid.
    pub fn check(&self) -> Vec<CliError> {
        let c = &self.config;
        let mut out = Vec::new();

        if c.name.is_empty() || !c.name.chars().all(|ch| ch.is_ascii_alphanumeric() || "-_.".contains(ch)) {
            out.push(self.issue("", "name", "must be non-empty and use only [A-Za-z0-9._-]"));
        }

        if let Err(m) = c.flux_strength() {
            let key = if c.flux.alpha.is_some() { "alpha" } else { "phi_weber" };
            out.push(self.issue("flux", key, m));
        }
        if !(c.flux.bar_width.is_finite() && c.flux.bar_width >= 0.0) {
            out.push(self.issue("flux", "bar_width", "must be finite and >= 0 (metres)"));
        }

        if let Err(m) = c.beam_params() {
            let key = if m.contains("kinetic") {
                "kinetic_energy_ev"
            } else if c.beam.w.is_some() && c.beam.beta.is_none() {
                "w"
            } else if m.contains("coherence") {
                "coherence_width"
            } else {
                "beta"
            };
            out.push(self.issue("beam", key, m));
        }

        let g = &c.grid;
        if g.n < MIN_GRID_POINTS {
            out.push(self.issue("grid", "n", format!("needs at least {MIN_GRID_POINTS} samples")));
        }
        if !positive(g.extent) {
            out.push(self.issue("grid", "extent", "must be finite and > 0 (metres)"));
        }
        if g.pad == 0 {
            out.push(self.issue("grid", "pad", "must be >= 1"));
        }
        match c.mode {
            Mode::Analytic | Mode::PathIntegral1d => {
                match g.target_n {
                    Some(t) if t >= MIN_GRID_POINTS => {}
                    _ => out.push(self.issue("grid", "target_n", format!("1-D runs need target_n >= {MIN_GRID_POINTS}"))),
                }
                if c.is_near_plane() {
                    if !g.target_half_width.map(positive).unwrap_or(false) {
                        out.push(self.issue("grid", "target_half_width", "near-plane runs need a positive half-width (metres)"));
                    }
                } else if !g.target_half_angle.map(positive).unwrap_or(false) {
                    out.push(self.issue("grid", "target_half_angle", "far-field runs need a positive half-angle"));
                }
            }
            Mode::PathIntegral2d => {
                match &c.aperture {
                    None => out.push(self.issue("aperture", "radius", "2-D runs need an [aperture] table with `radius`")),
                    Some(a) if !positive(a.radius) => out.push(self.issue("aperture", "radius", "must be finite and > 0 (metres)")),
                    Some(a) if c.flux.bar_width > 2.0 * a.radius => {
                        out.push(self.issue("flux", "bar_width", "bar is wider than the aperture diameter"))
                    }
                    _ => {}
                }
                if c.geometry.fraction != 1.0 {
                    out.push(self.issue("geometry", "fraction", "2-D runs are far-field only; fraction must be 1"));
                }
            }
        }

        if !positive(c.geometry.distance) {
            out.push(self.issue("geometry", "distance", "must be finite and > 0 (metres)"));
        }
        if !(c.geometry.fraction > 0.0 && c.geometry.fraction <= 1.0) {
            out.push(self.issue("geometry", "fraction", "must lie in (0, 1]"));
        }
        if let Some(l) = c.geometry.camera_length {
            if !positive(l) {
                out.push(self.issue("geometry", "camera_length", "must be finite and > 0 (metres)"));
            }
        }
        if !(c.coherence.source_rms.is_finite() && c.coherence.source_rms >= 0.0) {
            out.push(self.issue("coherence", "source_rms", "must be finite and >= 0"));
        }
        if let Some(d) = c.outputs.display_half_angle {
            if !positive(d) {
                out.push(self.issue("outputs", "display_half_angle", "must be finite and > 0"));
            }
        }
        out
    }

    /// First problem, if any, as an error.
    pub fn validated(self) -> Result<Self, CliError> {
        match self.check().into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Sets a dotted numeric field (`flux.alpha`) in a configuration document
/// and re-parses it.
pub fn with_parameter(base: &LoadedConfig, path: &str, value: f64) -> Result<LoadedConfig, CliError> {
    let bad = |message: String| CliError::Config {
        origin: base.origin.clone(),
        line: None,
        field: path.to_string(),
        message,
    };
    let mut doc: toml::Value = toml::from_str(&base.text).map_err(|e| bad(e.to_string()))?;
    let parts: Vec<&str> = path.split('.').collect();
    let (leaf, parents) = parts.split_last().ok_or_else(|| bad("empty field name".into()))?;
    let mut node = &mut doc;
    for (i, p) in parents.iter().enumerate() {
        node = node
            .as_table_mut()
            .ok_or_else(|| bad(format!("`{}` is not a table", parts[..i].join("."))))?
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| bad(format!("`{}` is not a table", parents.join("."))))?;
    let v = match table.get(*leaf) {
        Some(toml::Value::Integer(_)) if value.fract() == 0.0 => toml::Value::Integer(value as i64),
        Some(toml::Value::Integer(_)) => return Err(bad(format!("integer field cannot take {value}"))),
        Some(toml::Value::Float(_)) | None => toml::Value::Float(value),
        Some(_) => return Err(bad("not a numeric field".into())),
    };
    table.insert(leaf.to_string(), v);
    let text = toml::to_string(&doc).map_err(|e| bad(e.to_string()))?;
    parse(&text, &format!("{} [{path} = {value}]", base.origin))
}

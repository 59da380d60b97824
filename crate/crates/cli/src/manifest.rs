//! Serializable description of a single invocation.
//!
//! A manifest built from flags is first [resolved](RunManifest::resolve):
//! every knob the command reads gets its default filled in, and knobs the
//! command ignores are cleared. The resolved manifest is what gets written to
//! output headers and `--save-manifest` files, so re-running it reproduces the
//! output byte for byte.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use scmn_core::coupled::ScOptions;
use scmn_core::potential::{DEFAULT_CURVE_GRID, DEFAULT_THRESHOLD_GRID};
use scmn_core::{ChannelModel, DeOptions, DegreeProfile};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sir,
    SirLimit,
    De,
    ScDe,
    BpThreshold,
    PotentialCurve,
    PotentialThreshold,
    EnergyGap,
    Rate,
    Verify,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Sir => "sir",
            Command::SirLimit => "sir-limit",
            Command::De => "de",
            Command::ScDe => "sc-de",
            Command::BpThreshold => "bp-threshold",
            Command::PotentialCurve => "potential-curve",
            Command::PotentialThreshold => "potential-threshold",
            Command::EnergyGap => "energy-gap",
            Command::Rate => "rate",
            Command::Verify => "verify",
        }
    }

    fn uses_channel(self) -> bool {
        self != Command::Rate
    }

    fn uses_eps(self) -> bool {
        matches!(self, Command::Sir | Command::De | Command::ScDe | Command::EnergyGap)
    }

    fn uses_coupling(self) -> bool {
        matches!(self, Command::ScDe | Command::BpThreshold | Command::Rate)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Svg,
    Json,
}

impl Format {
    /// Format implied by a file extension, if any.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "csv" => Some(Format::Csv),
            "svg" => Some(Format::Svg),
            "json" => Some(Format::Json),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Degrees {
    pub dl: u32,
    pub dr: u32,
    pub dg: u32,
}

impl Default for Degrees {
    fn default() -> Self {
        Degrees { dl: 4, dr: 2, dg: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coupling {
    pub chain_length: usize,
    pub width: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Knobs {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    /// Record every `trace_stride`-th iteration in DE traces.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub path: PathBuf,
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: Command,
    /// Built-in channel name or path to a channel table.
    #[serde(default = "default_channel")]
    pub channel: String,
    #[serde(default)]
    pub degrees: Degrees,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default)]
    pub knobs: Knobs,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<Output>,
}

fn default_channel() -> String {
    "bec".into()
}

pub const DEFAULT_TOL_EPS: f64 = 1e-4;
pub const DEFAULT_SC_TRACE_STRIDE: usize = 100;

impl RunManifest {
    pub fn new(command: Command) -> Self {
        RunManifest {
            command,
            channel: default_channel(),
            degrees: Degrees::default(),
            coupling: None,
            eps: None,
            rate: None,
            knobs: Knobs::default(),
            output: None,
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| CliError::Validation(format!("manifest: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn degree_profile(&self) -> Result<DegreeProfile> {
        let Degrees { dl, dr, dg } = self.degrees;
        Ok(DegreeProfile::new(dl, dr, dg)?)
    }

    /// Resolves the channel by built-in name, falling back to a table file.
    pub fn channel_model(&self) -> Result<ChannelModel> {
        resolve_channel(&self.channel)
    }

    /// Checks the manifest and fills in defaults for the knobs the command
    /// reads. Knobs the command ignores are dropped.
    pub fn resolve(&self) -> Result<RunManifest> {
        let cmd = self.command;
        self.degree_profile()?;
        if cmd.uses_channel() {
            self.channel_model()?;
        }
        let mut out = RunManifest::new(cmd);
        out.degrees = self.degrees;
        out.channel = if cmd.uses_channel() { self.channel.clone() } else { String::new() };

        if cmd.uses_eps() {
            let eps = self.eps.ok_or_else(|| missing(cmd, "--eps"))?;
            out.eps = Some(unit("eps", eps)?);
        }
        if cmd == Command::SirLimit {
            let rate = self.rate.unwrap_or(self.degree_profile()?.design_rate());
            out.rate = Some(rate);
        }
        if cmd.uses_coupling() {
            let c = self.coupling.ok_or_else(|| missing(cmd, "--L and --w"))?;
            if c.chain_length == 0 || c.width == 0 {
                return Err(CliError::Validation("L and w must be >= 1".into()));
            }
            out.coupling = Some(c);
        }

        let k = self.knobs;
        let de = DeOptions::default();
        let sc = ScOptions::default();
        out.knobs = match cmd {
            Command::De => Knobs {
                tol: Some(k.tol.unwrap_or(de.tol)),
                max_iter: Some(k.max_iter.unwrap_or(de.max_iter)),
                trace_stride: Some(k.trace_stride.unwrap_or(1)),
                ..Knobs::default()
            },
            Command::ScDe => Knobs {
                tol: Some(k.tol.unwrap_or(sc.tol)),
                max_iter: Some(k.max_iter.unwrap_or(sc.max_iter)),
                trace_stride: Some(k.trace_stride.unwrap_or(DEFAULT_SC_TRACE_STRIDE)),
                ..Knobs::default()
            },
            Command::BpThreshold => Knobs {
                tol: Some(k.tol.unwrap_or(sc.tol)),
                max_iter: Some(k.max_iter.unwrap_or(sc.max_iter)),
                tol_eps: Some(k.tol_eps.unwrap_or(DEFAULT_TOL_EPS)),
                ..Knobs::default()
            },
            Command::PotentialCurve => Knobs {
                grid_size: Some(k.grid_size.unwrap_or(DEFAULT_CURVE_GRID)),
                ..Knobs::default()
            },
            Command::PotentialThreshold | Command::EnergyGap | Command::Verify => Knobs {
                grid_size: Some(k.grid_size.unwrap_or(DEFAULT_THRESHOLD_GRID)),
                ..Knobs::default()
            },
            Command::Sir | Command::SirLimit | Command::Rate => Knobs::default(),
        };
        if let Some(t) = out.knobs.tol {
            positive("tol", t)?;
        }
        if let Some(t) = out.knobs.tol_eps {
            positive("tol_eps", t)?;
        }
        if out.knobs.max_iter == Some(0) {
            return Err(CliError::Validation("max_iter must be >= 1".into()));
        }
        if out.knobs.trace_stride == Some(0) {
            return Err(CliError::Validation("trace_stride must be >= 1".into()));
        }
        out.output = self.output.clone();
        Ok(out)
    }

    /// `# key = value` lines describing the resolved manifest.
    pub fn header_lines(&self) -> Vec<String> {
        let mut lines = vec![
            format!("# scmn {}", env!("CARGO_PKG_VERSION")),
            format!("# command = {}", self.command),
        ];
        if !self.channel.is_empty() {
            lines.push(format!("# channel = {}", self.channel));
        }
        let Degrees { dl, dr, dg } = self.degrees;
        lines.push(format!("# degrees = ({dl},{dr},{dg})"));
        if let Some(c) = self.coupling {
            lines.push(format!("# L = {}", c.chain_length));
            lines.push(format!("# w = {}", c.width));
        }
        if let Some(e) = self.eps {
            lines.push(format!("# eps = {e:?}"));
        }
        if let Some(r) = self.rate {
            lines.push(format!("# rate = {r:?}"));
        }
        let k = self.knobs;
        if let Some(v) = k.grid_size {
            lines.push(format!("# grid_size = {v}"));
        }
        if let Some(v) = k.tol {
            lines.push(format!("# tol = {v:e}"));
        }
        if let Some(v) = k.tol_eps {
            lines.push(format!("# tol_eps = {v:e}"));
        }
        if let Some(v) = k.max_iter {
            lines.push(format!("# max_iter = {v}"));
        }
        if let Some(v) = k.trace_stride {
            lines.push(format!("# trace_stride = {v}"));
        }
        lines
    }
}

pub fn resolve_channel(name: &str) -> Result<ChannelModel> {
    if let Some(m) = ChannelModel::builtin(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    if !path.is_file() {
        return Err(CliError::Validation(format!(
            "unknown channel '{name}': expected bec, dec, pr2 or a channel table file"
        )));
    }
    Ok(ChannelModel::load(path)?)
}

fn missing(cmd: Command, what: &str) -> CliError {
    CliError::Validation(format!("{cmd} requires {what}"))
}

fn unit(name: &str, v: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} = {v} is outside [0, 1]")))
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Validation(format!("{name} must be positive, got {v}")))
    }
}

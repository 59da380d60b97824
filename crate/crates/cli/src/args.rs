//! Command-line flags and their translation into a [`RunManifest`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Result};
use crate::manifest::{Command, Coupling, Degrees, Format, Knobs, Output, RunManifest};

#[derive(Debug, Parser)]
#[command(
    name = "scmn",
    version,
    about = "Density evolution, thresholds and potential functions for spatially-coupled MacKay-Neal codes"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Symmetric information rate I(eps)
    Sir(Params),
    /// Channel parameter at which the SIR equals --rate (default d_r/d_l)
    SirLimit(Params),
    /// Uncoupled density evolution from all-ones
    De(Params),
    /// Spatially-coupled density evolution
    ScDe(Params),
    /// BP threshold of the coupled chain by bisection
    BpThreshold(Params),
    /// Non-trivial fixed-point curve and its potential
    PotentialCurve(Params),
    /// Potential threshold and SIR limit at the design rate
    PotentialThreshold(Params),
    /// Energy gap below the potential threshold
    EnergyGap(Params),
    /// Design rate of the coupled ensemble
    Rate(Params),
    /// Run the invariant checks and print a pass/fail table
    Verify(Params),
    /// Re-run a saved manifest
    Run(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Svg,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Params {
    /// bec, dec, pr2, or a channel table (.toml or .json)
    #[arg(long, default_value = "bec")]
    pub channel: String,
    #[arg(long, default_value_t = 4)]
    pub dl: u32,
    #[arg(long, default_value_t = 2)]
    pub dr: u32,
    #[arg(long, default_value_t = 2)]
    pub dg: u32,
    /// Chain length
    #[arg(long = "L", value_name = "L")]
    pub chain_length: Option<usize>,
    /// Coupling width
    #[arg(long = "w", value_name = "W")]
    pub width: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    /// Number of x1 grid points
    #[arg(long)]
    pub grid: Option<usize>,
    /// DE convergence tolerance
    #[arg(long)]
    pub tol: Option<f64>,
    /// Bisection tolerance on eps
    #[arg(long)]
    pub tol_eps: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Keep every n-th iteration in DE traces
    #[arg(long)]
    pub trace_stride: Option<usize>,
    #[arg(short = 'o', long)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the --output extension when omitted
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Write the resolved manifest to this path
    #[arg(long)]
    pub save_manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub save_manifest: Option<PathBuf>,
}

impl Params {
    pub fn to_manifest(&self, command: Command) -> Result<RunManifest> {
        let coupling = match (self.chain_length, self.width) {
            (Some(chain_length), Some(width)) => Some(Coupling { chain_length, width }),
            (None, None) => None,
            _ => return Err(CliError::Validation("--L and --w must be given together".into())),
        };
        let output = match (&self.output, self.format) {
            (Some(path), f) => Some(Output {
                path: path.clone(),
                format: f.map(Format::from).or_else(|| Format::from_path(path)).unwrap_or(Format::Csv),
            }),
            (None, Some(_)) => return Err(CliError::Validation("--format needs --output".into())),
            (None, None) => None,
        };
        Ok(RunManifest {
            command,
            channel: self.channel.clone(),
            degrees: Degrees {
                dl: self.dl,
                dr: self.dr,
                dg: self.dg,
            },
            coupling,
            eps: self.eps,
            rate: self.rate,
            knobs: Knobs {
                grid_size: self.grid,
                tol: self.tol,
                tol_eps: self.tol_eps,
                max_iter: self.max_iter,
                trace_stride: self.trace_stride,
            },
            output,
        })
    }
}

impl Sub {
    /// The manifest this invocation describes, and where to save it.
    pub fn manifest(&self) -> Result<(RunManifest, Option<PathBuf>)> {
        let (cmd, p) = match self {
            Sub::Run(r) => return Ok((RunManifest::load(&r.manifest)?, r.save_manifest.clone())),
            Sub::Sir(p) => (Command::Sir, p),
            Sub::SirLimit(p) => (Command::SirLimit, p),
            Sub::De(p) => (Command::De, p),
            Sub::ScDe(p) => (Command::ScDe, p),
            Sub::BpThreshold(p) => (Command::BpThreshold, p),
            Sub::PotentialCurve(p) => (Command::PotentialCurve, p),
            Sub::PotentialThreshold(p) => (Command::PotentialThreshold, p),
            Sub::EnergyGap(p) => (Command::EnergyGap, p),
            Sub::Rate(p) => (Command::Rate, p),
            Sub::Verify(p) => (Command::Verify, p),
        };
        Ok((p.to_manifest(cmd)?, p.save_manifest.clone()))
    }
}

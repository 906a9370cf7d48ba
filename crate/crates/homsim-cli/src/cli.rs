//! Argument definitions.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

/// Two-photon interference simulator and analysis pipelines.
#[derive(Parser)]
#[command(name = "homsim", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Emit analytic g²⊥/g²∥/visibility curves as CSV.
    Model(ModelArgs),
    /// Synthesize sources, mix them on the beam splitter, apply detector
    /// effects, and write a PTT click file (manifest JSON on stdout).
    Simulate(SimulateArgs),
    /// Correlate channels of a PTT file into a normalized histogram CSV.
    Correlate(CorrelateArgs),
    /// Fit the correlation model to a ⊥/∥ histogram pair (JSON result).
    Fit(FitArgs),
}

#[derive(Args)]
pub struct ModelArgs {
    /// Laser / single-photon intensity ratio.
    #[arg(long, default_value_t = 0.2)]
    pub eta: f64,
    /// Mode overlap on the beam splitter.
    #[arg(long, default_value_t = 0.85)]
    pub v0: f64,
    /// Beam-splitter intensity reflection.
    #[arg(long, default_value_t = 0.5)]
    pub r: f64,
    /// Beam-splitter intensity transmission.
    #[arg(long, default_value_t = 0.5)]
    pub t: f64,
    /// Laser coherence time (e.g. 150ns).
    #[arg(long, default_value = "150ns")]
    pub tau_l: String,
    /// Single-photon correlation time (e.g. 115ps).
    #[arg(long, default_value = "115ps")]
    pub tau_c: String,
    /// Single-photon g²(0).
    #[arg(long, default_value_t = 0.03)]
    pub g2sp0: f64,
    /// Frequency separation (e.g. 10MHz).
    #[arg(long, default_value = "0")]
    pub df: String,
    /// Half-width of the delay grid.
    #[arg(long, default_value = "600ns")]
    pub tau_max: String,
    /// Grid step.
    #[arg(long, default_value = "1ns")]
    pub step: String,
    /// Emit the same-output-port (bunching) variants instead.
    #[arg(long)]
    pub same_port: bool,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Pipeline configuration JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// PTT output path (overrides output.ptt from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct CorrelateArgs {
    /// Input PTT file.
    #[arg(long)]
    pub input: PathBuf,
    /// First channel (D1, D2, or an index).
    #[arg(long, default_value = "D1")]
    pub ch_a: String,
    /// Second channel.
    #[arg(long, default_value = "D2")]
    pub ch_b: String,
    /// Autocorrelate a single channel instead.
    #[arg(long)]
    pub auto: bool,
    /// Channel for --auto.
    #[arg(long, default_value = "D1")]
    pub channel: String,
    /// Bin width (e.g. 10ps). Falls back to the config's correlator
    /// section, then 10ps.
    #[arg(long)]
    pub bin: Option<String>,
    /// Delay window half-width (e.g. 1us). Falls back to the config's
    /// correlator section, then 1us.
    #[arg(long)]
    pub window: Option<String>,
    /// Pipeline config JSON supplying correlator defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// True observation span for normalization (data extent when omitted).
    #[arg(long)]
    pub duration: Option<String>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct FitArgs {
    /// Perpendicular-configuration histogram CSV.
    #[arg(long)]
    pub perp: PathBuf,
    /// Parallel-configuration histogram CSV.
    #[arg(long)]
    pub par: PathBuf,
    /// Initial model parameters (JSON, same shape as config model
    /// sections). Alternatively take them from --config's fit section.
    #[arg(long, conflicts_with = "config")]
    pub init: Option<PathBuf>,
    /// Pipeline config JSON supplying fit.init and fit.free.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Free parameters (comma-separated: eta,v0,tau_l,tau_c,g2_sp0,delta_f).
    /// Defaults to eta,v0 (or the config's fit.free list).
    #[arg(long)]
    pub free: Vec<String>,
    /// Output JSON path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

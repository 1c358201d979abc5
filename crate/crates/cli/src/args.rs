use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Heat-flux large deviations of harmonic networks.
#[derive(Debug, Parser)]
#[command(name = "fluxnet", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural checks, controllability, lineality and entropy production.
    Validate(Common),
    /// Spectral gap along the boundary of the section.
    GapScan(GapScanArgs),
    /// Rate function and fluctuation-relation defect on a flux grid.
    Rate(RateArgs),
    /// Cumulant generating function by all three routes.
    Cgf(CgfArgs),
    /// Monte Carlo simulation compared with the analytic predictions.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn common(&self) -> &Common {
        match self {
            Command::Validate(c) => c,
            Command::GapScan(a) => &a.common,
            Command::Rate(a) => &a.common,
            Command::Cgf(a) => &a.common,
            Command::Simulate(a) => &a.common,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::GapScan(_) => "gap-scan",
            Command::Rate(_) => "rate",
            Command::Cgf(_) => "cgf",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Network description (TOML).
    pub spec: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// Command-specific acceptance tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Worker threads for data-parallel stages.
    #[arg(long, env = "FLUXNET_THREADS")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct GapScanArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of boundary directions (at least 8).
    #[arg(long, default_value_t = 64)]
    pub dirs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Grid as `N1xN2x…` points per section axis, optionally followed by
    /// `@H` for the half width; defaults depend on the section dimension.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CgfArgs {
    #[command(flatten)]
    pub common: Common,
    /// Tilt as comma-separated components; repeatable. Without it, `g` is
    /// sampled along `s·ϑ⁻¹`.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Vec<String>,
    /// Number of points along `s·ϑ⁻¹`, `s ∈ [−0.25, 1.25]`.
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of trajectories.
    #[arg(long, default_value_t = 10_000)]
    pub traj: usize,
    /// Horizon; by default twenty relaxation times.
    #[arg(long = "T")]
    pub horizon: Option<f64>,
    /// Time step; by default `0.01 / max |sp(A)|`.
    #[arg(long)]
    pub step: Option<f64>,
    /// Bootstrap resamples for the CGF intervals.
    #[arg(long, default_value_t = 500)]
    pub bootstrap: usize,
    /// Per-trajectory flux records are written to this file.
    #[arg(long)]
    pub records: Option<PathBuf>,
}

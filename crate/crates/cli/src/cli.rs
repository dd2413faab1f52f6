use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};

use crate::oracle::Suite;

#[derive(Debug, Parser)]
#[command(
    name = "fmin-shoot",
    version,
    about = "Shooting solver for rotationally symmetric f-minimal tori"
)]
pub struct Cli {
    /// JSON run configuration; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (the FMIN_SHOOT_OUT environment variable wins over this).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweep rows and bracket probes.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check that a weight satisfies the admissibility conditions.
    ValidateWeight(ValidateArgs),
    /// Integrate a single shot from (0, R).
    Shoot(ShootArgs),
    /// Bracket and bisect the torus radius, then export the closed profile.
    FindTorus(TorusArgs),
    /// Shoot a list of radii and tabulate the large-R quantities.
    Sweep(SweepArgs),
    /// Run the exact-solution and property suites.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// Dimension of the hypersurface.
    #[arg(long)]
    pub n: Option<u32>,
    /// `constant c`, `saturating m M k` or `expr "<f'(s)>" m=<m> M=<M>`.
    #[arg(long)]
    pub weight: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub rel_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub abs_tol: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub max_time: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub on_axis_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub weight: Option<String>,
    /// Largest argument sampled.
    #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
    pub smax: f64,
    #[arg(long, default_value_t = 10_001)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct ShootArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Initial radius.
    #[arg(long = "R", allow_negative_numbers = true)]
    pub radius: f64,
}

#[derive(Debug, Args)]
pub struct TorusArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Probe interval `lo,hi` for the torus radius.
    #[arg(long, allow_negative_numbers = true)]
    pub bracket: Option<String>,
    /// Bisection stops once the bracket is narrower than this.
    #[arg(long, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Samples on the half-profile; the closed curve has twice as many less two.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Azimuthal segments of the mesh.
    #[arg(long)]
    pub segments: Option<usize>,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("radii").required(true).args(["r_list", "r_range"])))]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated radii.
    #[arg(long = "R-list", allow_negative_numbers = true)]
    pub r_list: Option<String>,
    /// `lo:hi:linear|geometric:count`.
    #[arg(long = "R-range", allow_negative_numbers = true)]
    pub r_range: Option<String>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "all")]
    pub suite: Suite,
}

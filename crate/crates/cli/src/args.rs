use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kiss_control::model::BoundaryCondition;

/// Critical patch sizes, eradication verdicts and simulations for patchy
/// tick control.
#[derive(Debug, Parser)]
#[command(name = "kiss-control", version)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Scenario JSON file.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario (see `preset list`).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Coarsest oracle grid density in cells per unit length.
    #[arg(long = "grid-cells", global = true)]
    pub grid_cells: Option<u32>,
    /// Seed for randomized harnesses; every command is deterministic and ignores it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Field overrides applied on top of the scenario.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Beneficial zone width.
    #[arg(long = "R", global = true, allow_hyphen_values = true)]
    pub big_r: Option<f64>,
    /// Control zone width.
    #[arg(long = "r", global = true, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Number of periodic repeats.
    #[arg(long = "K", global = true)]
    pub repeats: Option<u32>,
    /// Boundary condition (dirichlet, neumann or periodic).
    #[arg(long, global = true)]
    pub bc: Option<BoundaryCondition>,
    /// Beneficial diffusion (scalar scenarios).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Beneficial growth rate (scalar scenarios).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Control diffusion (scalar scenarios).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Control mortality (scalar scenarios).
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Method {
    Closed,
    Oracle,
    #[default]
    Both,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Critical patch size (and the symmetrized size for staged scenarios).
    CriticalSize {
        /// Round A⁻¹M to this many decimals first; defaults to the preset's setting.
        #[arg(long)]
        reduced_digits: Option<u32>,
    },
    /// Eradication verdict from the closed-form criteria and/or the oracle.
    Verdict {
        #[arg(long, value_enum, default_value_t)]
        method: Method,
    },
    /// Smallest control mortality that eradicates.
    MinMortality,
    /// Smallest control zone width that eradicates.
    MinZone,
    /// Top eigenvalue estimates with their error bounds.
    Spectrum,
    /// Integrate the dynamics and fit the growth exponent.
    Simulate {
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon.
        #[arg(long = "T")]
        horizon: Option<f64>,
        /// Comma-separated snapshot times.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
    },
    /// Vary one parameter over a uniform grid.
    Sweep {
        /// One of a, lambda, b, mu, R, r (only R and r for staged scenarios).
        #[arg(long)]
        vary: String,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 11)]
        steps: usize,
    },
    /// Built-in scenarios.
    Preset {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum PresetAction {
    List,
    /// Print a preset as scenario JSON.
    Show { name: String },
}

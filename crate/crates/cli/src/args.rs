use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "hopfx", version, about = "Hopf and degenerate Hopf analysis of a delayed Hill-type feedback equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,

    /// Write the result here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct Model {
    #[arg(long)]
    pub n: f64,
    #[arg(long)]
    pub beta0: f64,
    #[arg(long)]
    pub k: f64,
    #[arg(long)]
    pub delta: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stability verdict for x2 at a given delay.
    Classify {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        r: f64,
    },
    /// Hopf delay over a (k, delta) grid.
    HopfSurface {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        beta0: f64,
        #[arg(long)]
        k_min: f64,
        #[arg(long)]
        k_max: f64,
        #[arg(long)]
        k_steps: usize,
        #[arg(long)]
        delta_min: f64,
        #[arg(long)]
        delta_max: f64,
        #[arg(long)]
        delta_steps: usize,
    },
    /// First (and optionally second) Lyapunov coefficient at the Hopf delay.
    Lyapunov {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        l2: bool,
    },
    /// Locate the delta with l1 = 0 for fixed (n, beta0, k).
    FindCodim2 {
        #[arg(long)]
        n: f64,
        #[arg(long)]
        beta0: f64,
        #[arg(long)]
        k: f64,
        /// Lower end of a known sign-change bracket (skips the delta walk).
        #[arg(long, requires = "delta_hi")]
        delta_lo: Option<f64>,
        #[arg(long, requires = "delta_lo")]
        delta_hi: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Scan a parameter grid and compare with the published n = 2 points.
    Tables {
        #[arg(long, value_enum, conflicts_with = "grid")]
        preset: Option<Preset>,
        /// Grid spec as JSON (`n_values`, `beta0_values`, `k_values`, optional `delta_seed`,
        /// `delta_growth`, `delta_max`).
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Emit every located record, not only the n = 2 rows.
        #[arg(long)]
        all: bool,
    },
    /// Integrate the delay equation from a constant history x2 + offset.
    Simulate {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        r: f64,
        #[arg(long, default_value_t = 0.01)]
        offset: f64,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 100)]
        steps_per_delay: usize,
    },
    /// Check the predicted criticality by simulation near the Hopf delay (JSON report).
    VerifyDirection {
        #[command(flatten)]
        model: Model,
        /// Distances from the Hopf delay.
        #[arg(long, value_delimiter = ',', required = true)]
        offsets: Vec<f64>,
        #[arg(long, value_enum, default_value_t = Side::Transversality)]
        side: Side,
        #[arg(long, default_value_t = 100)]
        steps_per_delay: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Paper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Side {
    Transversality,
    Below,
    Above,
}

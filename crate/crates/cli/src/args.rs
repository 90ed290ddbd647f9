use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use lifted_nmf::{Init, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Simultaneous,
    Sequential,
    Unnormalized,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Simultaneous => Variant::Simultaneous,
            VariantArg::Sequential => Variant::Sequential,
            VariantArg::Unnormalized => Variant::Unnormalized,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Deterministic,
    Random,
}

impl From<InitArg> for Init {
    fn from(v: InitArg) -> Self {
        match v {
            InitArg::Deterministic => Init::Deterministic,
            InitArg::Random => Init::Random,
        }
    }
}

/// Factorize a nonnegative matrix V ~ WH under the I-divergence.
///
/// Exit codes: 0 converged, 2 iteration limit reached, 3 underflow,
/// 4 bad input or usage, 5 identity check failed, 1 output could not be written.
#[derive(Debug, Clone, Parser)]
#[command(name = "lifted-nmf", version)]
pub struct Args {
    /// CSV file holding V, one row per line, no header.
    #[arg(long)]
    pub input: PathBuf,

    /// Inner size, 1 <= k <= min(rows, cols).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,

    #[arg(long, value_enum, default_value_t = VariantArg::Simultaneous)]
    pub variant: VariantArg,

    #[arg(long, value_enum, default_value_t = InitArg::Deterministic)]
    pub init: InitArg,

    /// Seed for the random initialization.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,

    /// Stop once the gain falls to this fraction of the current divergence.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,

    /// Write the per-iteration trace as JSON Lines to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,

    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,

    /// Record the split of every gain into its two projection gains.
    #[arg(long)]
    pub components: bool,

    /// Add a first-order optimality report to the manifest.
    #[arg(long)]
    pub kkt: bool,

    /// Threshold used by the optimality report.
    #[arg(long, default_value_t = 1e-6)]
    pub kkt_tol: f64,

    /// Audit every step and abort on the first violated identity.
    #[arg(long)]
    pub check_identities: bool,
}

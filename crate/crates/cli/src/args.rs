use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use loopsource_core::multiplex::ObjectiveKind;
use loopsource_core::DetectorKind;

use crate::feasibility::{
    DEFAULT_ATTENUATION_DB_PER_KM, DEFAULT_GROUP_INDEX, DEFAULT_LOOPS, DEFAULT_SWITCH_EFFICIENCY,
};

#[derive(Debug, Parser)]
#[command(
    name = "loopsource",
    version,
    about = "Fibre-loop multiplexed single-photon source: analytic sweeps, optimisation, Monte Carlo and figure data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Heralding probability per shot and over a train of time-bins.
    Herald {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Conditional and unconditional fidelity of one configuration.
    Fidelity {
        #[command(flatten)]
        model: ModelArgs,
        /// One row per loop count instead of a summary row.
        #[arg(long)]
        per_loop: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Every combination of the listed parameters.
    Sweep {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Best constant pump power, and optionally the best per-bin schedule.
    Optimize {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum, default_value = "unconditional")]
        objective: Objective,
        /// Also optimise one pump power per time-bin.
        #[arg(long)]
        biased: bool,
        #[arg(long, default_value_t = 1e-3)]
        nbar_min: f64,
        #[arg(long, default_value_t = 10.0)]
        nbar_max: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo run compared with the analytic model.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        sources: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Several loop sources run side by side, keeping the freshest photon.
    Parallel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 2)]
        sources: usize,
        /// Monte Carlo trials to run alongside the analytic values.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dataset behind one of the figures (fig2 to fig11).
    Figure {
        id: String,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        sources: Option<usize>,
        /// Recompute the captioned mean photon numbers.
        #[arg(long)]
        reoptimize: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Loop length and loss for a repetition rate.
    Feasibility {
        /// Repetition rate in Hz.
        #[arg(long)]
        rate: f64,
        /// Fibre attenuation in dB/km.
        #[arg(long, default_value_t = DEFAULT_ATTENUATION_DB_PER_KM)]
        attenuation: f64,
        #[arg(long, default_value_t = DEFAULT_LOOPS)]
        loops: usize,
        #[arg(long = "eta-s", default_value_t = DEFAULT_SWITCH_EFFICIENCY)]
        eta_s: f64,
        #[arg(long, default_value_t = DEFAULT_GROUP_INDEX)]
        group_index: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
}

/// Model parameters; unset values fall back to per-command defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub detector: Option<Detector>,
    /// Mean photon number, or a comma list.
    #[arg(long, allow_hyphen_values = true)]
    pub nbar: Option<String>,
    /// Sets detector, switch and fibre efficiency together.
    #[arg(long, conflicts_with_all = ["eta_d", "eta_s", "eta_f"])]
    pub eta: Option<String>,
    #[arg(long = "eta-d")]
    pub eta_d: Option<String>,
    #[arg(long = "eta-s")]
    pub eta_s: Option<String>,
    #[arg(long = "eta-f")]
    pub eta_f: Option<String>,
    /// Time-bins: `n`, an inclusive range `a..b`, or a comma list.
    #[arg(long = "t")]
    pub t: Option<String>,
    /// Per-bin `--nbar` values and printed schedules are in firing order.
    #[arg(long)]
    pub chronological: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Detector {
    Resolved,
    Bucket,
}

impl From<Detector> for DetectorKind {
    fn from(d: Detector) -> Self {
        match d {
            Detector::Resolved => DetectorKind::NumberResolved,
            Detector::Bucket => DetectorKind::Bucket,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Objective {
    Conditional,
    Unconditional,
}

impl From<Objective> for ObjectiveKind {
    fn from(o: Objective) -> Self {
        match o {
            Objective::Conditional => ObjectiveKind::ConditionalFidelity,
            Objective::Unconditional => ObjectiveKind::UnconditionalFidelity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Herald { .. } => "herald",
            Command::Fidelity { .. } => "fidelity",
            Command::Sweep { .. } => "sweep",
            Command::Optimize { .. } => "optimize",
            Command::Simulate { .. } => "simulate",
            Command::Parallel { .. } => "parallel",
            Command::Figure { .. } => "figure",
            Command::Feasibility { .. } => "feasibility",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Herald { output, .. }
            | Command::Fidelity { output, .. }
            | Command::Sweep { output, .. }
            | Command::Optimize { output, .. }
            | Command::Simulate { output, .. }
            | Command::Parallel { output, .. }
            | Command::Figure { output, .. }
            | Command::Feasibility { output, .. } => output,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn eta_conflicts_with_individual_efficiencies() {
        let err = Cli::try_parse_from(["loopsource", "herald", "--eta", "0.9", "--eta-d", "0.8"])
            .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}

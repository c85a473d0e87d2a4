use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crp_core::FitnessSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Parser, Serialize, Deserialize)]
#[command(name = "crp", version, about = "Disordered Chinese restaurant process simulator")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Master seed; required by every stochastic subcommand.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for outputs and manifest.json.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Worker threads (CRP_THREADS takes precedence).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Snapshot,
    Evolve,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Run the discrete process and record checkpoints.
    SimulateDiscrete(SimulateDiscrete),
    /// Sample the continuous-time embedding and dump its point measure.
    SimulateContinuous(SimulateContinuous),
    /// Solve for the scaling triple (u_t, v_t, w_t).
    VerifyScaling(VerifyScaling),
    /// Audit the Gumbel tail envelope on a grid.
    CheckAssumptions(CheckAssumptions),
    /// Compare box counts and the largest exponent with their Poisson predictions.
    PppCompare(PppCompare),
    /// Empirical Yule sup-deviation frequencies against the tail bound.
    YuleTail(YuleTail),
    /// Leader share in probability along a time grid.
    ExpOneTable(ExperimentArgs),
    /// Two-table behaviour along a geometric checkpoint schedule.
    ExpTwoTable(ExperimentArgs),
    /// Table count, first-table share and leader birth index.
    ExpBasic(ExperimentArgs),
    /// Leadership changes in discrete time.
    ExpTransitions(ExperimentArgs),
    /// Re-run the invocation recorded in a manifest.
    #[serde(skip)]
    Replay(Replay),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SimulateDiscrete(_) => "simulate-discrete",
            Command::SimulateContinuous(_) => "simulate-continuous",
            Command::VerifyScaling(_) => "verify-scaling",
            Command::CheckAssumptions(_) => "check-assumptions",
            Command::PppCompare(_) => "ppp-compare",
            Command::YuleTail(_) => "yule-tail",
            Command::ExpOneTable(_) => "exp-one-table",
            Command::ExpTwoTable(_) => "exp-two-table",
            Command::ExpBasic(_) => "exp-basic",
            Command::ExpTransitions(_) => "exp-transitions",
            Command::Replay(_) => "replay",
        }
    }

    /// Whether the subcommand draws random numbers.
    pub fn needs_seed(&self) -> bool {
        !matches!(self, Command::VerifyScaling(_) | Command::CheckAssumptions(_) | Command::Replay(_))
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateDiscrete {
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long)]
    pub dist: FitnessSpec,
    #[arg(long)]
    pub n_max: u64,
    /// Number of log-spaced checkpoints up to n_max.
    #[arg(long, default_value_t = 20)]
    pub checkpoints: usize,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// Output file (defaults to <out-dir>/simulate-discrete.<ext>).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateContinuous {
    #[arg(long, value_enum, default_value_t = Mode::Snapshot)]
    pub mode: Mode,
    /// Single horizon.
    #[arg(long, conflicts_with = "t_grid")]
    pub t: Option<f64>,
    /// Comma-separated increasing horizons.
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long)]
    pub dist: FitnessSpec,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// Keep the table opened at time 0.
    #[arg(long)]
    pub include_root_table: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyScaling {
    #[arg(long)]
    pub dist: FitnessSpec,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CheckAssumptions {
    #[arg(long)]
    pub dist: FitnessSpec,
    #[arg(long)]
    pub t: f64,
    /// Envelope constant c1 (catalog default when omitted).
    #[arg(long)]
    pub c1: Option<f64>,
    /// Window constant c2 (catalog default when omitted).
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub x_min: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub x_max: f64,
    #[arg(long, default_value_t = 101)]
    pub points: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct PppCompare {
    #[arg(long, default_value_t = 1.0)]
    pub theta: f64,
    #[arg(long)]
    pub dist: FitnessSpec,
    #[arg(long)]
    pub t: f64,
    /// Box `a,b` or `a,b,c` (repeatable): [0,a] × [b,∞) × [c,∞).
    #[arg(long = "box", value_name = "A,B[,C]", allow_negative_numbers = true, required = true)]
    pub boxes: Vec<String>,
    /// Levels x for P(ξ⁽¹⁾ ≤ x), comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub xs: Vec<f64>,
    /// Gap levels λ for P(ξ⁽¹⁾ − ξ⁽³⁾ ≤ λ), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub replicas: usize,
    /// |z| above which a comparison counts as a statistical failure.
    #[arg(long, default_value_t = 3.0)]
    pub z_max: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct YuleTail {
    /// Grid points `lambda,a,b,y` (repeatable); a built-in grid when omitted.
    #[arg(long = "point", value_name = "LAMBDA,A,B,Y")]
    pub points: Vec<String>,
    #[arg(long, default_value_t = 4000)]
    pub replicas: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExperimentArgs {
    /// TOML experiment config; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dist: Option<FitnessSpec>,
    #[arg(long)]
    pub theta: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub t_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub allow_outside_theorem: bool,
    #[arg(long)]
    pub include_root_table: Option<bool>,
    #[arg(long)]
    pub min_change_n: Option<u64>,
    /// Run even when the expected step count exceeds the budget.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Replay {
    pub manifest: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_flags_parse_after_subcommand() {
        let cli =
            Cli::try_parse_from(["crp", "verify-scaling", "--dist", "weibull:alpha=2", "--t", "10,100", "--seed", "3"])
                .unwrap();
        assert_eq!(cli.seed, Some(3));
        match cli.command {
            Command::VerifyScaling(v) => assert_eq!(v.t, vec![10.0, 100.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_dist_key_is_rejected() {
        assert!(Cli::try_parse_from(["crp", "verify-scaling", "--dist", "weibull", "--t", "10"]).is_err());
    }

    #[test]
    fn invocation_round_trips_through_json() {
        let cli =
            Cli::try_parse_from(["crp", "--seed", "9", "exp-basic", "--dist", "frechet:alpha=2", "--n-grid", "10,100"])
                .unwrap();
        let back: Cli = serde_json::from_str(&serde_json::to_string(&cli).unwrap()).unwrap();
        assert_eq!(serde_json::to_value(&back).unwrap(), serde_json::to_value(&cli).unwrap());
    }
}

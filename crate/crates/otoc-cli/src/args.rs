//! Command-line schema. Every subcommand's arguments serialize to the JSON
//! config block embedded in its output, so a run can be replayed from it.

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "otoc", version, about = "Ensemble-averaged k-OTOCs of a system–bottleneck–bath circuit")]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// Worker threads for the parallel kernels.
    #[arg(long, global = true, env = "OTOC_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Serialize, Clone, Debug, PartialEq)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Noncrossing partitions of {1..k} with Kreweras complements and Möbius values.
    Lattice(LatticeArgs),
    /// Spectrum, entropy and ergodicity class of a gate's channel.
    Channel(ChannelArgs),
    /// Free-probability steady state and its per-partition breakdown.
    Steady(SteadyArgs),
    /// k-OTOC series by one or more methods.
    Otoc(OtocArgs),
    /// Monte Carlo scan over bath dimensions with fitted slopes.
    Scan(ScanArgs),
    /// Influence-matrix MPS as a JSON container.
    ExportMps(ExportArgs),
    /// Figure data sets.
    Recipe(RecipeArgs),
    /// Replay a JSON config, or the config embedded in an earlier output.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Args, Serialize, Clone, Debug, Default, PartialEq)]
pub struct OutArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct LatticeArgs {
    #[arg(long)]
    pub k: usize,
    /// Add the dense Möbius matrix `μ[ν][σ]` (0 where ν ⊄ σ).
    #[arg(long)]
    pub mobius: bool,
    /// Add the Kreweras complement of each partition.
    #[arg(long)]
    pub kreweras: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct ChannelArgs {
    /// `lib:NAME[:key=value,...]` or `file:PATH`.
    #[arg(long)]
    pub gate: String,
    /// Tolerance for the ergodicity classification.
    #[arg(long, default_value_t = otoc_core::channel::DEFAULT_CLASS_TOL)]
    pub tol: f64,
    /// Full diagnostics as JSON instead of a text summary.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum ObsMode {
    /// `a_i = a_λ`, `b_i = b_λ`.
    Eigen,
    RandomTraceless,
    Random,
    /// Eigenoperators with `a_1 = a_λ + ε·1`.
    EigenPlusIdentity,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct ObsArgs {
    /// JSON observable files for a_1..a_k (one file is reused for every slot).
    #[arg(long = "obs-a", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub obs_a: Vec<String>,
    #[arg(long = "obs-b", value_delimiter = ',')]
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub obs_b: Vec<String>,
    /// Generate observables instead of reading files.
    #[arg(long = "obs-mode", value_enum, conflicts_with_all = ["obs_a", "obs_b"])]
    pub obs_mode: Option<ObsMode>,
    #[arg(long = "obs-seed", default_value_t = 0)]
    pub obs_seed: u64,
    /// Identity admixture for `eigen-plus-identity`.
    #[arg(long, default_value_t = 1e-4)]
    pub eps: f64,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct SteadyArgs {
    #[arg(long)]
    pub k: usize,
    /// Needed for eigenoperator observables and the projector value.
    #[arg(long)]
    pub gate: Option<String>,
    /// Local dimension when no gate is given.
    #[arg(long)]
    pub d: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub obs: ObsArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Multichain,
    Transfer,
    Montecarlo,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct OtocArgs {
    #[arg(long, value_enum, value_delimiter = ',', default_value = "transfer")]
    pub method: Vec<MethodArg>,
    #[arg(long)]
    pub k: usize,
    #[arg(long = "t-max")]
    pub t_max: usize,
    #[arg(long)]
    pub gate: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub obs: ObsArgs,
    /// Bath dimension for Monte Carlo.
    #[arg(long = "d-e", default_value_t = 16)]
    pub d_e: usize,
    #[arg(long, default_value_t = 100)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Brickwork bath with this many sites instead of a single bath.
    #[arg(long = "bath-sites")]
    pub bath_sites: Option<usize>,
    /// Exit with status 1 when the methods disagree beyond 1e-10.
    #[arg(long)]
    pub validate: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct ScanArgs {
    #[arg(long)]
    pub k: usize,
    /// Time at which the slopes are fitted.
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub gate: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub obs: ObsArgs,
    #[arg(long = "d-e-list", value_delimiter = ',', default_value = "8,16,32,64")]
    pub d_e_list: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the fitted slopes here as JSON; standard error when absent.
    #[arg(long)]
    #[serde(skip)]
    pub summary: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct ExportArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub t: usize,
    #[arg(long = "d-c")]
    pub d_c: usize,
    #[arg(long = "d-a", default_value_t = 2)]
    pub d_a: usize,
    /// Recontract against this gate with seeded random observables and
    /// compare with the transfer evolution.
    #[arg(long)]
    pub verify: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(ValueEnum, Serialize, Clone, Copy, Debug, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    /// k = 1..4 at d = 3 with eigenoperator and random traceless observables.
    Fig1,
    /// The same at d = 2.
    Fig2,
    /// Two-step relaxation with a small identity admixture.
    Fig3,
}

#[derive(Args, Serialize, Clone, Debug, PartialEq)]
pub struct RecipeArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Local dimension; 3 for fig1 and fig3, 2 for fig2 by default.
    #[arg(long)]
    pub d: Option<usize>,
    /// First Haar seed tried; the first gate with a real subleading eigenvalue is used.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// 20 for fig1 and fig2, 40 for fig3 by default.
    #[arg(long = "t-max")]
    pub t_max: Option<usize>,
    #[arg(long = "obs-seed", default_value_t = 1)]
    pub obs_seed: u64,
    #[command(flatten)]
    #[serde(skip)]
    pub output: OutArgs,
}

#[derive(Args, Clone, Debug, PartialEq)]
pub struct RunArgs {
    /// JSON config, or a CSV/JSON output carrying a provenance block.
    pub config: String,
    /// Flags appended to the replayed command line; they override the file.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    pub overrides: Vec<String>,
}

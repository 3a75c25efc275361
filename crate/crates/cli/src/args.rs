use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use concept_align_core::mask_store::DEFAULT_QUANTILE;
use concept_align_core::OperatorSet;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "concept-align",
    version,
    about = "Compositional explanations of neurons"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Explain one neuron with the selected algorithm.
    Explain(ExplainArgs),
    /// Write a synthetic concept archive and neuron masks.
    Gen(GenArgs),
    /// Compare optimal and beam explanations over a directory of units.
    Compare(CompareArgs),
    /// Dump per-concept quantities and the disjoint matrix.
    Stats(StatsArgs),
    /// Run several algorithms over a directory of units and summarise the counters.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Optimal,
    Beam,
    BeamVanilla,
    Brute,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Optimal => "optimal",
            Algorithm::Beam => "beam",
            Algorithm::BeamVanilla => "beam-vanilla",
            Algorithm::Brute => "brute",
        }
    }
}

fn parse_operators(s: &str) -> Result<OperatorSet, String> {
    s.parse::<OperatorSet>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct DatasetArgs {
    /// Concept archive (CMA1).
    #[arg(long)]
    pub dataset: PathBuf,
    /// Quantile used to binarise raw activations (NAF1 inputs).
    #[arg(long, default_value_t = DEFAULT_QUANTILE)]
    pub quantile: f64,
    /// Accept concepts with an empty mask.
    #[arg(long)]
    pub allow_empty_concepts: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub max_length: usize,
    #[arg(long, default_value_t = 5)]
    pub beam_size: usize,
    /// Comma-separated subset of or,and,andnot.
    #[arg(long, default_value = "or,and,andnot", value_parser = parse_operators)]
    pub operators: OperatorSet,
    #[arg(long)]
    pub no_backprop: bool,
    #[arg(long)]
    pub no_equivalences: bool,
    #[arg(long)]
    pub budget_nodes: Option<u64>,
    #[arg(long)]
    pub budget_seconds: Option<f64>,
    /// Refuse brute-force enumeration above this many labels.
    #[arg(long, default_value_t = concept_align_core::search::DEFAULT_BRUTE_FORCE_CAP)]
    pub brute_force_cap: u128,
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Neuron mask (NAM1) or raw activations (NAF1).
    #[arg(long)]
    pub neuron: PathBuf,
    #[arg(long, value_enum)]
    pub algorithm: Algorithm,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Omit timing so that repeated runs print identical reports.
    #[arg(long)]
    pub seedless_output: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub concepts: usize,
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    #[arg(long, default_value_t = 64)]
    pub features: usize,
    #[arg(long, default_value_t = 0.5)]
    pub annotation_density: f64,
    #[arg(long, default_value_t = 0.3)]
    pub overlap_density: f64,
    #[arg(long, default_value_t = 0.1)]
    pub fire_rate: f64,
    /// Number of neuron masks to write.
    #[arg(long, default_value_t = 1)]
    pub units: u64,
    /// Write the three-concept, one-sample fixture instead of a random dataset.
    #[arg(long)]
    pub worked_example: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    /// Directory containing NAM1/NAF1 unit files.
    #[arg(long)]
    pub neurons: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Beam variant compared against the optimal search.
    #[arg(long, value_enum, default_value = "beam")]
    pub baseline: Algorithm,
    /// Number of units searched in parallel.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub neuron: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DatasetArgs,
    #[arg(long)]
    pub neurons: PathBuf,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Algorithms to run; defaults to all four.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Omit timing columns.
    #[arg(long)]
    pub seedless_output: bool,
    /// Print a plain-text table instead of JSON.
    #[arg(long)]
    pub table: bool,
}

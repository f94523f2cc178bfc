use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use disclift::evaluation::ThresholdMode;
use disclift::{TransformConfig, Variant};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "disclift",
    version,
    about = "Discriminative lifting transforms for labelled signals"
)]
pub struct Cli {
    /// Worker threads for solves and permutation tests (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled dataset as CSV.
    Generate(GenerateArgs),
    /// Fit a transform on a two-class training set.
    Fit(FitArgs),
    /// Apply a fitted model to signals and write the merged coefficients.
    Apply(ApplyArgs),
    /// Rank local classifiers, vote, and test significance.
    Eval(EvalArgs),
    /// Export analysis and synthesis base vectors of a model.
    Basis(BasisArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Waveform,
    ShapeCbf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(value_enum)]
    pub generator: Generator,
    #[arg(long)]
    pub per_class: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    #[value(alias = "reg")]
    Regularised,
    #[value(alias = "nonreg")]
    NonRegularised,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Regularised => Variant::Regularised,
            VariantArg::NonRegularised => Variant::NonRegularised,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TransformArgs {
    /// Prediction window length L.
    #[arg(long, default_value_t = 4)]
    pub window: usize,
    /// PSVM weight nu.
    #[arg(long, default_value_t = 1.0)]
    pub nu: f64,
    /// Decomposition levels M.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, value_enum, default_value = "non-regularised")]
    pub variant: VariantArg,
    /// Vanishing-moment constraints p (non-regularised only).
    #[arg(long, default_value_t = 0)]
    pub constraint_degree: usize,
}

impl TransformArgs {
    pub fn config(&self) -> TransformConfig {
        TransformConfig {
            levels: self.levels,
            window: self.window,
            nu: self.nu,
            variant: self.variant.into(),
            constraint_degree: self.constraint_degree,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Labelled CSV: samples then a class id per row.
    #[arg(long)]
    pub train: PathBuf,
    /// The two classes to fit on, e.g. `1,2` (required with more than two classes).
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<u32>>,
    #[command(flatten)]
    pub transform: TransformArgs,
    #[arg(long)]
    pub out_model: PathBuf,
    /// Merged coefficients of the training set.
    #[arg(long)]
    pub out_features: Option<PathBuf>,
    /// Write the prediction problem and solution at `LEVEL:K` as JSON.
    #[arg(long, value_name = "LEVEL:K")]
    pub dump_solve: Option<String>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Signals as CSV, with or without a trailing class-id column.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    PsvmBias,
    Optimal,
}

impl From<ThresholdArg> for ThresholdMode {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::PsvmBias => ThresholdMode::PsvmBias,
            ThresholdArg::Optimal => ThresholdMode::OptimalThreshold,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: Option<PathBuf>,
    /// Use a fitted model instead of fitting on the training set.
    #[arg(long, conflicts_with = "validation_split")]
    pub model: Option<PathBuf>,
    /// Restrict to two classes, e.g. `1,2`. More than two classes run one-against-one.
    #[arg(long, value_delimiter = ',')]
    pub classes: Option<Vec<u32>>,
    #[command(flatten)]
    pub transform: TransformArgs,
    /// Ensemble sizes.
    #[arg(long, value_delimiter = ',', default_value = "3,15")]
    pub top: Vec<usize>,
    #[arg(long, value_enum, default_value = "psvm-bias")]
    pub threshold: ThresholdArg,
    /// Permutations per classifier (0 disables the test, otherwise at least 100).
    #[arg(long, default_value_t = 0)]
    pub permutations: usize,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.75)]
    pub min_accuracy: f64,
    /// Fraction of the training set held out for ranking.
    #[arg(long)]
    pub validation_split: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

//! Flag definitions for the `meaad` binary.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Detects adversarial queries against embedding retrieval systems by
/// checking context consistency across multiple expert galleries.
#[derive(Debug, Parser)]
#[command(name = "meaad", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scenario: expert galleries plus benign queries.
    Gen(GenArgs),
    /// Extract labeled context features from queries and galleries.
    Featurize(FeaturizeArgs),
    /// Train the MLP detector on a feature file.
    Train(TrainArgs),
    /// Evaluate a detector (MLP or voting baseline) on labeled queries.
    Eval(EvalArgs),
    /// Perturb query embeddings with an attack.
    Attack(AttackArgs),
    /// Sweep expert count, support size, or feature subsets.
    Ablate(AblateArgs),
    /// Emit per-query relation statistics as CSV.
    Stats(StatsArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Number of identities in the gallery.
    #[arg(long, default_value_t = 50)]
    pub identities: usize,

    /// Gallery items per identity.
    #[arg(long = "per-id", default_value_t = 20)]
    pub items_per_identity: usize,

    /// Number of expert models.
    #[arg(long, default_value_t = 4)]
    pub experts: usize,

    /// Embedding dimension.
    #[arg(long, default_value_t = 128)]
    pub dim: usize,

    /// Std-dev of item-level cluster noise.
    #[arg(long, default_value_t = 0.05)]
    pub cluster_noise: f64,

    /// Std-dev of per-expert embedding jitter.
    #[arg(long, default_value_t = 0.02)]
    pub expert_jitter: f64,

    /// Benign training queries drawn per identity.
    #[arg(long, default_value_t = 40)]
    pub train_queries_per_identity: usize,

    /// Benign evaluation queries drawn per identity.
    #[arg(long, default_value_t = 10)]
    pub eval_queries_per_identity: usize,

    /// RNG seed; falls back to MEAAD_SEED, then 7.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FeaturizeArgs {
    /// Gallery file, one per expert (repeatable).
    #[arg(long = "gallery", required = true)]
    pub galleries: Vec<PathBuf>,

    /// Query file with labeled rows (repeatable).
    #[arg(long = "queries", required = true)]
    pub queries: Vec<PathBuf>,

    /// Support set size.
    #[arg(long, default_value_t = 15)]
    pub k: usize,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    /// Labeled feature file.
    #[arg(long)]
    pub features: PathBuf,

    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,

    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,

    #[arg(long, default_value_t = 1024)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,

    /// RNG seed; falls back to MEAAD_SEED, then 7.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DetectorChoice {
    Mlp,
    Voting,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    /// Gallery file, one per expert (repeatable).
    #[arg(long = "gallery", required = true)]
    pub galleries: Vec<PathBuf>,

    /// Labeled query file (repeatable; benign and adversarial rows mix).
    #[arg(long = "queries", required = true)]
    pub queries: Vec<PathBuf>,

    /// Support set size.
    #[arg(long, default_value_t = 15)]
    pub k: usize,

    /// Which detector to evaluate.
    #[arg(long, value_enum, default_value_t = DetectorChoice::Mlp)]
    pub detector: DetectorChoice,

    /// Trained model file (MLP detector).
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Common-support-count threshold (voting detector); a count at or
    /// above this is benign.
    #[arg(long, default_value_t = 5)]
    pub threshold: usize,

    /// Probability threshold for the MLP decision.
    #[arg(long, default_value_t = 0.5)]
    pub prob_threshold: f64,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackChoice {
    Naive,
    Adaptive,
    Targeted,
}

#[derive(Debug, Clone, Args)]
pub struct AttackArgs {
    /// Attack family.
    #[arg(long, value_enum)]
    pub kind: AttackChoice,

    /// Query file to perturb.
    #[arg(long)]
    pub queries: PathBuf,

    /// Gallery files (adaptive and targeted attacks).
    #[arg(long = "gallery")]
    pub galleries: Vec<PathBuf>,

    /// Trained detector model (adaptive attack).
    #[arg(long)]
    pub model: Option<PathBuf>,

    /// Support set size used by gradient refreshes and the success test.
    #[arg(long, default_value_t = 15)]
    pub k: usize,

    /// Maximum perturbation of each query embedding (chordal distance).
    #[arg(long, default_value_t = 0.8)]
    pub epsilon: f64,

    #[arg(long, default_value_t = 50)]
    pub steps: usize,

    #[arg(long, default_value_t = 0.1)]
    pub step_size: f64,

    /// Weight of the affinity-preserving loss term (adaptive attack).
    #[arg(long, default_value_t = 1.0)]
    pub affinity_weight: f64,

    /// Re-retrieve support sets every this many steps (adaptive attack).
    #[arg(long, default_value_t = 5)]
    pub refresh_every: usize,

    /// Target identity for the targeted attack; omit to rotate each query
    /// to the next identity in the gallery.
    #[arg(long)]
    pub target_identity: Option<u64>,

    /// RNG seed; falls back to MEAAD_SEED, then 7.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblateMode {
    Experts,
    SupportSize,
    Features,
}

#[derive(Debug, Clone, Args)]
pub struct AblateArgs {
    /// Gallery file, one per expert (repeatable).
    #[arg(long = "gallery", required = true)]
    pub galleries: Vec<PathBuf>,

    /// Benign training queries.
    #[arg(long)]
    pub train_benign: PathBuf,

    /// Adversarial training queries.
    #[arg(long)]
    pub train_adversarial: PathBuf,

    /// Benign evaluation queries.
    #[arg(long)]
    pub eval_benign: PathBuf,

    /// Adversarial evaluation queries.
    #[arg(long)]
    pub eval_adversarial: PathBuf,

    /// Which sweep to run.
    #[arg(long, value_enum)]
    pub mode: AblateMode,

    /// Base support set size.
    #[arg(long, default_value_t = 15)]
    pub k: usize,

    /// Support sizes for the support-size sweep.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1, 5, 10, 15, 20, 30])]
    pub k_list: Vec<usize>,

    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,

    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,

    #[arg(long, default_value_t = 1024)]
    pub batch_size: usize,

    #[arg(long, default_value_t = 5000)]
    pub iterations: usize,

    /// RNG seed; falls back to MEAAD_SEED, then 7.
    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Gallery file, one per expert (repeatable).
    #[arg(long = "gallery", required = true)]
    pub galleries: Vec<PathBuf>,

    /// Labeled query file (repeatable).
    #[arg(long = "queries", required = true)]
    pub queries: Vec<PathBuf>,

    /// Support set size.
    #[arg(long, default_value_t = 15)]
    pub k: usize,

    #[arg(long)]
    pub out_dir: PathBuf,
}

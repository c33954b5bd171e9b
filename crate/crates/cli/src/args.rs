use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pathsim::recommender::{Phase, Role};
use pathsim::tuning::Protocol;
use pathsim::{Cutoff, MeasureConfig, Weights};

#[derive(Debug, Parser)]
#[command(name = "pathsim", version, about = "Path-based item similarity, explanations and evaluation")]
pub struct Cli {
    /// Seed for every random choice (rnd measure, holdout splits).
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,

    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress lines to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load TSV sources into a graph cache, optionally splitting interactions.
    Ingest(IngestArgs),
    /// Build the path-type frequency and centrality index.
    Index(IndexArgs),
    /// Similarity of one item pair.
    Sim(SimArgs),
    /// Most similar items to a seed item.
    Topk(TopkArgs),
    /// Ranked natural-language explanations for an item pair.
    Explain(ExplainArgs),
    /// Ranking accuracy against a ground-truth dataset.
    EvalGt(EvalGtArgs),
    /// Ranking accuracy of the item-kNN recommender on held-out interactions.
    EvalRec(EvalRecArgs),
    /// Grid search maximizing validation nDCG@10.
    Tune(TuneArgs),
    /// Wilcoxon signed-rank test between two per-query reports.
    Significance(SignificanceArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph cache written by `ingest`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Index written by `index`; rebuilt in memory when absent or stale.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Longest path considered by the index (`inf` for no bound).
    #[arg(long = "max-len")]
    pub max_len: Option<Cutoff>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureKind {
    Ipsim,
    Count,
    Ldsd,
    Rnd,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[arg(long, value_enum, default_value = "ipsim")]
    pub measure: MeasureKind,
    /// Rarity, unpopularity and shortness weights.
    #[arg(long = "w", default_value = "0.3,0.1,0.6")]
    pub weights: Weights,
    /// Longest path counted by ipsim.
    #[arg(long, default_value = "inf")]
    pub n: Cutoff,
}

impl MeasureArgs {
    pub fn config(&self, seed: u64) -> MeasureConfig {
        match self.measure {
            MeasureKind::Ipsim => MeasureConfig::IpSim {
                weights: self.weights,
                n: self.n,
            },
            MeasureKind::Count => MeasureConfig::Count,
            MeasureKind::Ldsd => MeasureConfig::Ldsd,
            MeasureKind::Rnd => MeasureConfig::Rnd { seed },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Convert {
    None,
    Ratings,
    Binary,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub entities: PathBuf,
    #[arg(long)]
    pub triples: PathBuf,
    #[arg(long)]
    pub items: PathBuf,
    /// Graph cache to write.
    #[arg(long)]
    pub out: PathBuf,
    /// User-item interactions to filter and split.
    #[arg(long, requires = "split_out")]
    pub interactions: Option<PathBuf>,
    #[arg(long, value_parser = parse_role, default_value = "raw-counts")]
    pub role: Role,
    /// Conversion applied before splitting; raw counts become ratings by default.
    #[arg(long, value_enum)]
    pub convert: Option<Convert>,
    #[arg(long, default_value_t = 5)]
    pub min_user_items: usize,
    #[arg(long, default_value_t = 5)]
    pub min_item_users: usize,
    #[arg(long, default_value_t = 0.4)]
    pub holdout: f64,
    /// Drop held-out entries rated below this value.
    #[arg(long)]
    pub min_rating: Option<f64>,
    /// Directory receiving train/validation/test TSVs.
    #[arg(long)]
    pub split_out: Option<PathBuf>,
}

fn parse_role(s: &str) -> Result<Role, pathsim::Error> {
    s.parse()
}

fn parse_phase(s: &str) -> Result<Phase, pathsim::Error> {
    s.parse()
}

fn parse_protocol(s: &str) -> Result<Protocol, pathsim::Error> {
    s.parse()
}

fn parse_cutoff(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(0) => Err("cutoffs must be positive".into()),
        Ok(n) => Ok(n),
        Err(_) => Err(format!("bad cutoff `{s}`")),
    }
}

#[derive(Debug, Args)]
pub struct IndexArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long = "max-len", default_value = "inf")]
    pub max_len: Cutoff,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub seed_item: String,
    #[arg(long)]
    pub target_item: String,
}

#[derive(Debug, Args)]
pub struct TopkArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub seed_item: String,
    #[arg(long, default_value_t = 10)]
    pub k: usize,
    /// Candidate ids, one per line; all other items when absent.
    #[arg(long)]
    pub candidates: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub seed_item: String,
    #[arg(long)]
    pub target_item: String,
    #[arg(long)]
    pub templates: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalGtArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_cutoff, value_delimiter = ',', default_value = "5,10")]
    pub cutoffs: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalRecArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[command(flatten)]
    pub measure: MeasureArgs,
    /// Directory written by `ingest --split-out`.
    #[arg(long)]
    pub split: PathBuf,
    /// Neighbourhood size.
    #[arg(long, default_value = "inf")]
    pub k: Cutoff,
    #[arg(long, value_parser = parse_cutoff, value_delimiter = ',', default_value = "5,10")]
    pub cutoffs: Vec<usize>,
    #[arg(long, value_parser = parse_phase, default_value = "test")]
    pub phase: Phase,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, value_parser = parse_protocol)]
    pub protocol: Protocol,
    #[arg(long, value_enum, default_value = "ipsim")]
    pub measure: MeasureKind,
    #[arg(long, default_value = "default")]
    pub grid: String,
    /// Validation ground truth (gt protocol).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Split directory (rec protocol).
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long, default_value = "ndcg@10")]
    pub metric: String,
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "fdembed", version, about = "Force-directed graph embedding")]
pub struct Cli {
    /// More log output on stderr (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an embedding and write it as text.
    Embed(EmbedArgs),
    /// Score an embedding on a downstream task.
    Eval(EvalArgs),
    /// Export a 2-dimensional embedding as a table or SVG scatter plot.
    Layout(LayoutArgs),
    /// Train and evaluate once per value of one hyperparameter.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GraphFormat {
    Edgelist,
    Mtx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Sigmoid,
    Tdist,
    Fr,
    Fa,
    Linlog,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ids {
    Auto,
    Dense,
    Remap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LrDecay {
    Constant,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Linkpred,
    Nodeclass,
    Cluster,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepParam {
    Lr,
    Nsamples,
    Dim,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Graph file.
    #[arg(long = "input", visible_alias = "graph", value_name = "PATH")]
    pub input: PathBuf,

    /// Input format; guessed from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<GraphFormat>,

    /// Insert the reverse of every arc.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set, num_args = 0..=1,
          default_missing_value = "true", value_name = "BOOL")]
    pub symmetrize: bool,

    /// Edge-list vertex ids start at 1.
    #[arg(long)]
    pub one_indexed: bool,

    /// How edge-list ids map to dense indices.
    #[arg(long, value_enum, default_value_t = Ids::Auto)]
    pub ids: Ids,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long, value_enum, default_value_t = Model::Tdist)]
    pub model: Model,

    #[arg(long, default_value_t = 128)]
    pub dim: usize,

    #[arg(long, default_value_t = 1200)]
    pub epochs: usize,

    #[arg(long, default_value_t = 384)]
    pub batch: usize,

    /// Negative samples per minibatch.
    #[arg(long, default_value_t = 6)]
    pub nsamples: usize,

    #[arg(long, default_value_t = 0.02)]
    pub lr: f64,

    #[arg(long, value_enum, default_value_t = LrDecay::Constant)]
    pub lr_decay: LrDecay,

    /// Random-walk context length; 0 uses direct neighbors.
    #[arg(long, default_value_t = 0)]
    pub walk_length: usize,

    /// Worker threads (defaults to the available cores).
    #[arg(long, env = "FDEMBED_WORKERS")]
    pub workers: Option<usize>,

    #[arg(long, env = "FDEMBED_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Record the sampled loss of every epoch.
    #[arg(long)]
    pub monitor_loss: bool,

    /// Split batches by vertex count instead of neighbor count.
    #[arg(long)]
    pub static_schedule: bool,

    /// Print `epoch <i> loss <x> elapsed_ms <t>` lines on stderr.
    #[arg(long)]
    pub progress: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub train: TrainArgs,

    /// Embedding output file.
    #[arg(long, value_name = "PATH")]
    pub output: PathBuf,

    /// Per-epoch loss table (needs --monitor-loss).
    #[arg(long, value_name = "PATH")]
    pub loss_out: Option<PathBuf>,

    /// Where to write the original-to-dense id table when ids were remapped.
    #[arg(long, value_name = "PATH")]
    pub remap_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TaskArgs {
    #[arg(long, value_enum)]
    pub task: Task,

    /// `vertex label` file, required for nodeclass.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,

    #[arg(long, default_value_t = 0.25)]
    pub train_fraction: f64,

    /// Random splits averaged for nodeclass.
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub embedding: PathBuf,

    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub task: TaskArgs,

    #[arg(long, env = "FDEMBED_SEED", default_value_t = 0)]
    pub seed: u64,

    #[arg(long, env = "FDEMBED_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct LayoutArgs {
    #[arg(long, value_name = "PATH")]
    pub embedding: PathBuf,

    /// Colors points by their first label.
    #[arg(long, value_name = "PATH")]
    pub labels: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    pub out_svg: Option<PathBuf>,

    #[arg(long, value_name = "PATH")]
    pub out_tsv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParam,

    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
    pub values: Vec<f64>,

    #[command(flatten)]
    pub graph: GraphArgs,

    #[command(flatten)]
    pub train: TrainArgs,

    #[command(flatten)]
    pub task: TaskArgs,

    /// Directory for per-value loss curves of lr sweeps.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub loss_dir: PathBuf,
}

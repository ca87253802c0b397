use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Dermoscopy preprocessing, quality metrics, linear-probe training and
/// classifier evaluation over manifests and prediction logs.
#[derive(Debug, Parser)]
#[command(name = "lesion", version)]
pub struct Cli {
    /// Worker threads for batch stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Seed for every random choice (split shuffling, batch order).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Log debug detail to stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sharpen and remove hair from every image in a manifest.
    Preprocess(PreprocessArgs),
    /// Compare originals against their preprocessed counterparts.
    Quality(QualityArgs),
    /// Scan a dataset directory and split train into train/val.
    Split(SplitArgs),
    /// Train the softmax probe on fixed image features.
    TrainProbe(TrainArgs),
    /// Confusion matrix and metrics from a prediction log.
    Eval(EvalArgs),
    /// Summarize a training curve and quality report.
    Report(ReportArgs),
    /// Write a seeded synthetic hairy-lesion dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output root; files land in `<out>/<split>/<label>/`.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with preprocessing parameters; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub no_sharpen: bool,
    #[arg(long)]
    pub no_hair_removal: bool,
}

#[derive(Debug, Args)]
pub struct QualityArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output root of a previous `preprocess` run.
    #[arg(long)]
    pub pre_root: PathBuf,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub root: PathBuf,
    #[arg(long, default_value_t = 0.75)]
    pub fraction: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for `model.txt`, `curve.csv` and `predictions.csv`.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON file with training parameters; missing keys take defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub eval_interval: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction log with header `case_id,predicted,confidence,truth`.
    #[arg(long)]
    pub log: PathBuf,
    /// Display percentages as whole numbers.
    #[arg(long)]
    pub paper_rounding: bool,
    /// Also write the evaluation as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Report written by `quality`.
    #[arg(long)]
    pub quality: Option<PathBuf>,
    /// Draw the training curve as an SVG file.
    #[arg(long)]
    pub render_svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Images per class in each of train and test.
    #[arg(long, default_value_t = 4)]
    pub count: usize,
}

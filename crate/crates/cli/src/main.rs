mod commands;
mod exit;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "gumdrop", version, about = "Sentence splitting, discourse unit segmentation and connective detection")]
struct Cli {
    /// More diagnostics on stderr (repeat for debug output).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,

    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TaskArg {
    Sent,
    Seg,
    Conn,
}

impl From<TaskArg> for gumdrop::Task {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Sent => gumdrop::Task::Sent,
            TaskArg::Seg => gumdrop::Task::Seg,
            TaskArg::Conn => gumdrop::Task::Conn,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Args)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub dev: PathBuf,
    /// Where to write the model.
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "on", require_equals = true)]
    pub force_sentence_starts: Option<OnOff>,
    /// Prediction file of an external base module covering train and dev tokens (repeatable).
    #[arg(long = "external-preds", value_name = "FILE")]
    pub external_preds: Vec<PathBuf>,
    /// Lexicon file for the wiki sentencer module.
    #[arg(long)]
    pub wiki_lexicon: Option<PathBuf>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Validate inputs and configuration, print the resolved configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args)]
pub struct PredictArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, value_enum, num_args = 0..=1, default_missing_value = "on", require_equals = true)]
    pub force_sentence_starts: Option<OnOff>,
    #[arg(long = "external-preds", value_name = "FILE")]
    pub external_preds: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// Gold corpus (repeatable, paired in order with --pred).
    #[arg(long, required = true)]
    pub gold: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub pred: Vec<PathBuf>,
    /// Score B-Conn and I-Conn as a single class.
    #[arg(long)]
    pub conn_merge_bi: bool,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args)]
pub struct LexiconArgs {
    /// Plain text, one paragraph per line.
    #[arg(long)]
    pub paragraphs: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub min_freq: u64,
    #[arg(long, default_value_t = 0.5)]
    pub min_ratio: f64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a sentencer, segmenter or connective detector.
    Train(TrainArgs),
    /// Label a corpus with a trained model.
    Predict(PredictArgs),
    /// Score predictions against gold and print a report.
    Score(ScoreArgs),
    /// Segment at sentence boundaries only.
    Baseline(BaselineArgs),
    /// Build the sentence-initial token lexicon from paragraphs.
    BuildLexicon(LexiconArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("cannot size the thread pool: {e}");
        }
    }
    let result = match &cli.command {
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Score(a) => commands::score(a),
        Command::Baseline(a) => commands::baseline(a),
        Command::BuildLexicon(a) => commands::build_lexicon(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

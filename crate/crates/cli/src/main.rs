//! `tooleval`: inject errors, build critic datasets, evaluate critics, run
//! assistants with and without feedback, score and review the results.
//!
//! Exit status: 0 on success, 1 for invalid configuration or input, 2 when
//! a model endpoint failed.

mod commands;
mod config;
mod error;
mod store;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tooleval_core::{ErrorCategory, Scenario};

#[derive(Parser)]
#[command(name = "tooleval", version, about = "Tool-use error injection, critic datasets and critic-in-the-loop evaluation")]
struct Cli {
    /// Configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic corpus (and optionally its tool pool).
    Synth(SynthArgs),
    /// Inject errors into the source corpus.
    Inject(InjectArgs),
    /// Build train/eval/test splits from injected and clean dialogues.
    Build(OutArgs),
    /// Export the training split as prompt/completion JSONL.
    ExportSft(ExportArgs),
    /// Score the configured critic on the test (or eval) roll-outs.
    EvalCritic(EvalCriticArgs),
    /// Run the assistant over the evaluation corpus under one scenario.
    Run(RunArgs),
    /// Aggregate run reports and annotation files into summary tables.
    Score(ScoreArgs),
    /// Annotate the turns of a run report, one outcome per turn.
    Review(ReviewArgs),
    /// Quality control of injected samples.
    #[command(subcommand)]
    Qc(QcCommand),
}

#[derive(Args)]
struct SynthArgs {
    /// Corpus file to write (JSONL).
    #[arg(long)]
    out: PathBuf,
    /// Number of dialogues.
    #[arg(long, default_value_t = 600)]
    limit: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the tool pool here.
    #[arg(long)]
    pool_out: Option<PathBuf>,
}

#[derive(Args)]
struct OutArgs {
    /// Output directory; overrides `out_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `seed` from the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct InjectArgs {
    #[command(flatten)]
    common: OutArgs,
    /// Only this category (repeatable). All eight by default.
    #[arg(long)]
    category: Vec<ErrorCategory>,
    /// Injections per category; overrides `injection.volume`.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum SplitName {
    Eval,
    Test,
}

#[derive(Args)]
struct EvalCriticArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitName,
    /// Only datapoints whose truth is this category (repeatable).
    #[arg(long)]
    category: Vec<ErrorCategory>,
    /// Score at most this many datapoints.
    #[arg(long)]
    limit: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    scenario: Scenario,
    /// Run only this seed instead of the configured `seeds`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use only the first N dialogues of the evaluation corpus.
    #[arg(long)]
    limit: Option<usize>,
    /// Continue partial runs and reuse finished reports.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ScoreArgs {
    /// Run reports, or directories containing them.
    reports: Vec<PathBuf>,
    /// Annotation files (JSONL) written by `review`.
    #[arg(long)]
    annotations: Vec<PathBuf>,
    /// Directory for summary files; tables are printed either way.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReviewArgs {
    /// Run report to review.
    #[arg(long)]
    report: PathBuf,
    /// Annotation file to append to. Defaults to `<report>.annotations.jsonl`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "anonymous")]
    annotator: String,
    /// Include turns that were not revised.
    #[arg(long)]
    all: bool,
    /// Review at most this many turns.
    #[arg(long)]
    limit: Option<usize>,
    /// Read answers from this file instead of the terminal.
    #[arg(long)]
    answers: Option<PathBuf>,
}

#[derive(Subcommand)]
enum QcCommand {
    /// Draw a review batch of injected samples for one category.
    Sample(QcSampleArgs),
    /// Mark each sample of a batch as following its definition or not.
    Annotate(QcAnnotateArgs),
    /// Pass or regenerate, per annotated batch.
    Decide(QcDecideArgs),
}

#[derive(Args)]
struct QcSampleArgs {
    #[arg(long)]
    category: ErrorCategory,
    /// Batch size.
    #[arg(long, default_value_t = tooleval_core::dataset::QC_SAMPLE_SIZE)]
    limit: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct QcAnnotateArgs {
    /// Batch written by `qc sample`.
    #[arg(long)]
    batch: PathBuf,
    #[arg(long, default_value = "anonymous")]
    annotator: String,
    /// Defaults to the batch path with `.annotations.json`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    answers: Option<PathBuf>,
}

#[derive(Args)]
struct QcDecideArgs {
    /// Annotation files written by `qc annotate`.
    annotations: Vec<PathBuf>,
}

fn dispatch(cli: Cli) -> error::Result<()> {
    use commands as c;
    let config = || c::load_config(cli.config.as_deref());
    match cli.command {
        Command::Synth(a) => c::synth(&a.out, a.limit, a.seed, a.pool_out.as_deref()),
        Command::Inject(a) => c::inject(&config()?, a.common.out, a.common.seed, &a.category, a.limit),
        Command::Build(a) => c::build(&config()?, a.out, a.seed),
        Command::ExportSft(a) => c::export_sft(&config()?, a.out),
        Command::EvalCritic(a) => {
            let split = match a.split {
                SplitName::Eval => "eval",
                SplitName::Test => "test",
            };
            c::eval_critic(&config()?, a.out, split, &a.category, a.limit)
        }
        Command::Run(a) => c::run(&config()?, a.scenario, a.seed, a.out, a.limit, a.resume),
        Command::Score(a) => c::score(&a.reports, &a.annotations, a.out.as_deref()),
        Command::Review(a) => c::review(&a.report, a.out, &a.annotator, a.all, a.limit, a.answers.as_deref()),
        Command::Qc(QcCommand::Sample(a)) => c::qc_sample(&config()?, a.category, a.limit, a.seed, a.out),
        Command::Qc(QcCommand::Annotate(a)) => c::qc_annotate(&a.batch, &a.annotator, a.out, a.answers.as_deref()),
        Command::Qc(QcCommand::Decide(a)) => c::qc_decide(&a.annotations),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { error::EXIT_VALIDATION as u8 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use luxner::corpus_io::Format;
use luxner::llm_bench::PromptMode;
use luxner::train_export::{WeightEncoding, WeightScheme, DEFAULT_VOCAB_LIMIT};

mod commands;
mod config;

/// Annotation, scoring and LLM benchmark tools for luxury-domain NER.
#[derive(Debug, Parser)]
#[command(name = "luxner", version)]
struct Cli {
    /// Config file (default: ./luxner.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Taxonomy records file replacing the built-in label set.
    #[arg(long, global = true)]
    taxonomy: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check corpora: span bounds, overlaps, labels, IOB2 on column files.
    Validate {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
    },
    /// Convert a corpus between inline, columns and records.
    Convert {
        input: PathBuf,
        output: PathBuf,
        #[arg(long)]
        from: Option<Format>,
        #[arg(long)]
        to: Option<Format>,
        /// Lowercase text and surfaces (uncased training files).
        #[arg(long)]
        lowercase: bool,
        /// Turn stray I- tags into B- when reading column files.
        #[arg(long)]
        repair: bool,
    },
    /// Label distribution table; several corpora are summed.
    Stats {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Entity-level precision, recall and F1 of predictions against gold.
    Score {
        gold: PathBuf,
        predicted: PathBuf,
        #[arg(long)]
        gold_format: Option<Format>,
        #[arg(long)]
        pred_format: Option<Format>,
        /// Row name in the report table.
        #[arg(long, default_value = "predictions")]
        name: String,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Prompt a model over a corpus (embedded benchmark by default) and score it.
    Bench(BenchArgs),
    /// Training-side data: class weights, vocabulary extension, taxonomy.
    #[command(subcommand)]
    Export(ExportCommand),
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Markdown report path (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON sidecar path (default: the report path with a .json extension).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Gold corpus; the embedded 50-paragraph benchmark when omitted.
    corpus: Option<PathBuf>,
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, default_value = "zero")]
    mode: PromptMode,
    /// Model id sent to the endpoint and used in cache keys.
    #[arg(long)]
    model: Option<String>,
    #[arg(long, conflicts_with = "replay")]
    live: bool,
    #[arg(long)]
    replay: bool,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Write the prompts (to --out as a directory, else stdout) and stop.
    #[arg(long)]
    dry_run: bool,
    /// JSONL transcript path.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    #[arg(long)]
    base_url: Option<String>,
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long)]
    timeout_secs: Option<f64>,
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// Count each distinct (name, label) answer once per document.
    #[arg(long)]
    type_level: bool,
    #[arg(long)]
    case_sensitive: bool,
    /// Widen matches to token edges instead of rejecting them.
    #[arg(long)]
    expand_to_token: bool,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    max_tokens: Option<u32>,
}

#[derive(Debug, Subcommand)]
enum ExportCommand {
    /// Per-class loss weights as TSV records.
    Weights {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        #[arg(long, default_value = "balanced-mean")]
        scheme: WeightScheme,
        #[arg(long, default_value = "per-bio-tag")]
        encoding: WeightEncoding,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tokens to add to a base vocabulary, one per line.
    Vocab {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        #[arg(long)]
        format: Option<Format>,
        /// One word per line; case-sensitive.
        #[arg(long)]
        base_vocab: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_VOCAB_LIMIT)]
        limit: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON diagnostics (frequency, diacritics, scripts) per token.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
    },
    /// The label set as TSV records.
    Taxonomy {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", chain(&e.error));
            ExitCode::from(e.code)
        }
    }
}

/// Joins the cause chain, skipping causes whose text the wrapping message
/// already carries.
fn chain(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.ends_with(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use luxner::annotation::RepairMode;
use luxner::corpus_io::{corpus_stats, read_corpus, write_corpus, Corpus, Format, LabelHistogram, ReadOptions};
use luxner::fixtures::benchmark_corpus;
use luxner::llm_bench::{
    build_prompts, run_benchmark, Alignment, BenchError, BenchRun, BenchSettings, ClientError, HttpClient, ModelClient,
    PromptSpec, RecordingClient, ReplayCache, ReplayClient,
};
use luxner::report::{metrics_table, render_histogram, render_metrics};
use luxner::scorer::score_entities;
use luxner::taxonomy::{builtin_taxonomy, Taxonomy};
use luxner::train_export::{class_weights, parse_base_vocab, vocab_candidates};
use serde::Serialize;

use crate::config::Config;
use crate::{BenchArgs, Cli, Command, ExportCommand, OutputArgs};

/// An error with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub const INVALID: u8 = 1;
pub const USAGE: u8 = 2;
pub const TRANSPORT: u8 = 3;

trait ExitCodeExt<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> ExitCodeExt<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn fail<T>(code: u8, message: impl Into<String>) -> Result<T, Failure> {
    Err(Failure {
        code,
        error: anyhow!(message.into()),
    })
}

pub fn run(cli: Cli) -> Result<(), Failure> {
    let config = Config::load(cli.config.as_deref()).code(USAGE)?;
    let custom;
    let taxonomy: &Taxonomy = match &cli.taxonomy {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("taxonomy {}", path.display()))
                .code(USAGE)?;
            custom = Taxonomy::from_records(&text).code(USAGE)?;
            &custom
        }
        None => builtin_taxonomy(),
    };
    match cli.command {
        Command::Validate { paths, format } => validate(&paths, format, taxonomy),
        Command::Convert {
            input,
            output,
            from,
            to,
            lowercase,
            repair,
        } => {
            let repair = if repair { RepairMode::StrayItoB } else { RepairMode::Error };
            let corpus = load(&input, from, taxonomy, repair)?;
            let corpus = if lowercase { corpus.lowercased() } else { corpus };
            let to = format_for(&output, to)?;
            write_corpus(&corpus, &output, to).code(USAGE)
        }
        Command::Stats { paths, format, output } => {
            let mut hist = LabelHistogram::default();
            for p in &paths {
                hist.merge(&corpus_stats(&load(p, format, taxonomy, RepairMode::Error)?));
            }
            emit(&output, &render_histogram(&hist), &hist)
        }
        Command::Score {
            gold,
            predicted,
            gold_format,
            pred_format,
            name,
            output,
        } => {
            let gold = load(&gold, gold_format, taxonomy, RepairMode::Error)?;
            let pred = load(&predicted, pred_format, taxonomy, RepairMode::Error)?;
            let report = score_entities(&gold, &pred).code(INVALID)?;
            let md = if config.report.per_label {
                render_metrics(&name, &report)
            } else {
                metrics_table(&[(&name, &report)])
            };
            emit(&output, &md, &report)
        }
        Command::Bench(args) => bench(args, &config, taxonomy),
        Command::Export(cmd) => export(cmd, taxonomy),
    }
}

fn format_for(path: &Path, explicit: Option<Format>) -> Result<Format, Failure> {
    match explicit.or_else(|| Format::from_path(path)) {
        Some(f) => Ok(f),
        None => fail(USAGE, format!("cannot tell the format of {}; pass --format", path.display())),
    }
}

fn load(path: &Path, format: Option<Format>, taxonomy: &Taxonomy, repair: RepairMode) -> Result<Corpus, Failure> {
    let format = format_for(path, format)?;
    read_corpus(path, format, taxonomy, ReadOptions { repair }).code(INVALID)
}

fn load_all(paths: &[PathBuf], format: Option<Format>, taxonomy: &Taxonomy) -> Result<Vec<Corpus>, Failure> {
    paths.iter().map(|p| load(p, format, taxonomy, RepairMode::Error)).collect()
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text)
            .with_context(|| format!("writing {}", p.display()))
            .code(USAGE),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn sidecar_path(output: &OutputArgs) -> Option<PathBuf> {
    if let Some(p) = &output.sidecar {
        return Some(p.clone());
    }
    let out = output.out.as_ref()?;
    if out.extension().is_some_and(|e| e == "json") {
        let mut s = out.clone().into_os_string();
        s.push(".json");
        Some(s.into())
    } else {
        Some(out.with_extension("json"))
    }
}

/// Markdown report to `--out` or stdout, JSON sidecar next to it.
fn emit(output: &OutputArgs, markdown: &str, record: &impl Serialize) -> Result<(), Failure> {
    write_or_print(output.out.as_deref(), markdown)?;
    if let Some(path) = sidecar_path(output) {
        let mut json = serde_json::to_string_pretty(record).expect("report serializes");
        json.push('\n');
        write_or_print(Some(&path), &json)?;
    }
    Ok(())
}

fn validate(paths: &[PathBuf], format: Option<Format>, taxonomy: &Taxonomy) -> Result<(), Failure> {
    let mut failed = 0;
    for path in paths {
        match load(path, format, taxonomy, RepairMode::Error) {
            Ok(corpus) => {
                let hist = corpus_stats(&corpus);
                println!(
                    "{}: ok, {} documents, {} mentions",
                    path.display(),
                    corpus.len(),
                    corpus.mention_count()
                );
                if hist.boundary_warnings > 0 {
                    println!(
                        "{}: warning: {} spans do not fall on token edges",
                        path.display(),
                        hist.boundary_warnings
                    );
                }
            }
            Err(f) => {
                if f.code == USAGE {
                    return Err(f);
                }
                failed += 1;
                println!("{}: {}", path.display(), crate::chain(&f.error));
            }
        }
    }
    if failed > 0 {
        return fail(INVALID, format!("{failed} of {} corpora failed validation", paths.len()));
    }
    Ok(())
}

fn settings(args: &BenchArgs, config: &Config, model: String) -> Result<BenchSettings, Failure> {
    let mut s = BenchSettings::new(model);
    if let Some(t) = args.temperature {
        s.decoding.temperature = t;
    }
    if let Some(m) = args.max_tokens {
        s.decoding.max_tokens = m;
    }
    s.grounding = config.grounding.policy();
    if args.case_sensitive {
        s.grounding.case_insensitive = false;
    }
    if args.expand_to_token {
        s.grounding.alignment = Alignment::ExpandToToken;
    }
    s.type_level = args.type_level || config.scoring.type_level;
    s.max_in_flight = args.max_in_flight.unwrap_or(config.endpoint.max_in_flight);
    if s.max_in_flight < 1 {
        return fail(USAGE, "--max-in-flight must be at least 1");
    }
    Ok(s)
}

fn bench(args: BenchArgs, config: &Config, taxonomy: &Taxonomy) -> Result<(), Failure> {
    let corpus = match &args.corpus {
        Some(p) => load(p, args.format, taxonomy, RepairMode::Error)?,
        None => benchmark_corpus(),
    };
    let spec = PromptSpec::standard(args.mode, taxonomy);

    if args.dry_run {
        let prompts = build_prompts(&corpus, &spec);
        return match &args.output.out {
            Some(dir) => {
                std::fs::create_dir_all(dir).code(USAGE)?;
                for (id, prompt) in &prompts {
                    write_or_print(Some(&dir.join(format!("{id}.txt"))), prompt)?;
                }
                Ok(())
            }
            None => {
                for (id, prompt) in &prompts {
                    println!("==> {id} <==\n{prompt}\n");
                }
                Ok(())
            }
        };
    }

    if !args.live && !args.replay {
        return fail(USAGE, "choose --live or --replay, or pass --dry-run");
    }
    let Some(model) = args.model.clone().or_else(|| config.endpoint.model.clone()) else {
        return fail(USAGE, "no model id; pass --model or set endpoint.model");
    };
    let mut settings = settings(&args, config, model)?;
    let cache_dir = args.cache_dir.clone().or_else(|| config.cache.dir.clone());

    let client: Box<dyn ModelClient> = if args.replay {
        let Some(dir) = cache_dir else {
            return fail(USAGE, "--replay needs --cache-dir or cache.dir");
        };
        if !dir.is_dir() {
            return fail(USAGE, format!("cache directory {} does not exist", dir.display()));
        }
        settings.max_in_flight = 1;
        Box::new(ReplayClient::new(ReplayCache::new(dir)))
    } else {
        let Some(base_url) = args.base_url.clone().or_else(|| config.endpoint.base_url.clone()) else {
            return fail(USAGE, "--live needs --base-url or endpoint.base_url");
        };
        let timeout = match args.timeout_secs {
            Some(t) if !(t > 0.0 && t.is_finite()) => return fail(USAGE, "--timeout-secs must be positive"),
            Some(t) => std::time::Duration::from_secs_f64(t),
            None => config.endpoint.timeout(),
        };
        let env = args.api_key_env.as_deref().unwrap_or(&config.endpoint.api_key_env);
        let http = HttpClient::from_env(base_url, env, timeout).code(USAGE)?;
        match cache_dir {
            Some(dir) => Box::new(RecordingClient::new(http, ReplayCache::new(dir))),
            None => Box::new(http),
        }
    };

    let run = match run_benchmark(&corpus, &spec, client.as_ref(), &settings, taxonomy) {
        Ok(run) => run,
        Err(e @ BenchError::EmptyCorpus) => return Err(e).code(INVALID),
        Err(e @ BenchError::Client { .. }) => {
            let code = match &e {
                BenchError::Client {
                    source: ClientError::Transport { .. },
                    ..
                } => TRANSPORT,
                _ => USAGE,
            };
            return Err(e).code(code);
        }
    };
    if let Some(path) = &args.transcript {
        write_or_print(Some(path), &run.transcript_jsonl())?;
    }
    emit(
        &args.output,
        &bench_report(&run, config.report.per_label),
        &serde_json::json!({ "header": run.header, "summary": run.summary }),
    )?;
    if args.live && run.summary.transport_failed > 0 {
        return fail(
            TRANSPORT,
            format!("{} documents failed after retries", run.summary.transport_failed),
        );
    }
    Ok(())
}

fn bench_report(run: &BenchRun, per_label: bool) -> String {
    let h = &run.header;
    let s = &run.summary;
    let mut out = String::new();
    writeln!(out, "## {} ({})\n", h.model_id, h.mode.as_str()).unwrap();
    writeln!(out, "- prompt fingerprint: `{}`", h.fingerprint).unwrap();
    writeln!(
        out,
        "- responses: {} parsed, {} unparseable, {} transport failures",
        s.parsed, s.unparseable, s.transport_failed
    )
    .unwrap();
    writeln!(out, "- ungrounded predictions: {}", s.ungrounded).unwrap();
    writeln!(
        out,
        "- grounding: {}, {}, {}\n",
        if h.grounding.case_insensitive { "case-insensitive" } else { "case-sensitive" },
        match h.grounding.alignment {
            Alignment::RequireAligned => "token-aligned only",
            Alignment::ExpandToToken => "expanded to token edges",
        },
        if h.type_level { "type-level" } else { "mention-level" }
    )
    .unwrap();
    let name = format!("{} {}", h.model_id, h.mode.as_str());
    if per_label {
        out.push_str(&render_metrics(&name, &s.report));
    } else {
        out.push_str(&metrics_table(&[(&name, &s.report)]));
    }
    let failed: Vec<&str> = run
        .records
        .iter()
        .filter(|r| r.status != luxner::llm_bench::ParseStatus::Parsed)
        .map(|r| r.doc_id.as_str())
        .collect();
    if !failed.is_empty() {
        writeln!(out, "\nDocuments scored with no predictions: {}", failed.join(", ")).unwrap();
    }
    out
}

fn merged_histogram(corpora: &[Corpus]) -> LabelHistogram {
    let mut hist = LabelHistogram::default();
    for c in corpora {
        hist.merge(&corpus_stats(c));
    }
    hist
}

fn export(cmd: ExportCommand, taxonomy: &Taxonomy) -> Result<(), Failure> {
    match cmd {
        ExportCommand::Weights {
            paths,
            format,
            scheme,
            encoding,
            out,
        } => {
            let hist = merged_histogram(&load_all(&paths, format, taxonomy)?);
            let weights = class_weights(&hist, scheme, encoding).code(INVALID)?;
            write_or_print(out.as_deref(), &weights.to_records())
        }
        ExportCommand::Vocab {
            paths,
            format,
            base_vocab,
            limit,
            out,
            diagnostics,
        } => {
            let mut corpora = load_all(&paths, format, taxonomy)?.into_iter();
            let first = corpora.next().expect("at least one path");
            let corpus = corpora.try_fold(first, Corpus::concat).code(INVALID)?;
            let base = match &base_vocab {
                Some(p) => parse_base_vocab(
                    &std::fs::read_to_string(p)
                        .with_context(|| format!("base vocabulary {}", p.display()))
                        .code(USAGE)?,
                ),
                None => HashSet::new(),
            };
            let ext = vocab_candidates(&corpus, &base, limit);
            write_or_print(out.as_deref(), &ext.to_lines())?;
            if let Some(p) = &diagnostics {
                let mut json = serde_json::to_string_pretty(&ext).expect("diagnostics serialize");
                json.push('\n');
                write_or_print(Some(p), &json)?;
            }
            Ok(())
        }
        ExportCommand::Taxonomy { out } => write_or_print(out.as_deref(), &taxonomy.to_records()),
    }
}

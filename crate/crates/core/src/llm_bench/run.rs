use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::annotation::Document;
use crate::corpus_io::Corpus;
use crate::scorer::{count_spans, LabelCounts, MatchCounts, MetricsReport};
use crate::taxonomy::Taxonomy;

use super::cache::sha256_hex;
use super::client::{complete_with_retry, ClientError, CompletionRequest, Decoding, ModelClient, RetryPolicy};
use super::ground::{dedupe_type_level, ground, GroundedPrediction, GroundingNote, GroundingPolicy};
use super::prompt::{build_prompt, PromptMode, PromptSpec};
use super::response::{parse_response, ParseDiagnostics};

#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub model_id: String,
    pub decoding: Decoding,
    pub retry: RetryPolicy,
    pub grounding: GroundingPolicy,
    /// Deduplicate (name, label) pairs before grounding.
    pub type_level: bool,
    pub max_in_flight: usize,
}

impl BenchSettings {
    pub fn new(model_id: impl Into<String>) -> BenchSettings {
        BenchSettings {
            model_id: model_id.into(),
            decoding: Decoding::default(),
            retry: RetryPolicy::default(),
            grounding: GroundingPolicy::default(),
            type_level: false,
            max_in_flight: 4,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("the corpus is empty")]
    EmptyCorpus,
    #[error("document {doc_id}: {source}")]
    Client {
        doc_id: String,
        #[source]
        source: ClientError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParseStatus {
    Parsed,
    Unparseable,
    TransportFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentRecord {
    pub doc_id: String,
    pub prompt_sha256: String,
    pub prompt: String,
    pub raw_response: Option<String>,
    pub status: ParseStatus,
    pub attempts: u32,
    pub error: Option<String>,
    pub diagnostics: ParseDiagnostics,
    pub predictions: Vec<GroundedPrediction>,
    pub counts: LabelCounts,
    pub out_of_taxonomy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHeader {
    pub model_id: String,
    pub mode: PromptMode,
    /// SHA-256 over the model id and every prompt, zero-byte separated.
    pub fingerprint: String,
    pub documents: usize,
    pub decoding: Decoding,
    pub grounding: GroundingPolicy,
    pub type_level: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub parsed: usize,
    pub unparseable: usize,
    pub transport_failed: usize,
    pub ungrounded: usize,
    pub report: MetricsReport,
}

/// Wall-clock data; kept out of the transcript so replays compare equal.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timing {
    pub elapsed: Duration,
    pub per_document: Vec<Duration>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRun {
    pub header: RunHeader,
    pub records: Vec<DocumentRecord>,
    pub counts: MatchCounts,
    pub summary: RunSummary,
    pub timing: Timing,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TranscriptLine<'a> {
    Header(&'a RunHeader),
    Document(&'a DocumentRecord),
    Summary(&'a RunSummary),
}

impl BenchRun {
    pub fn report(&self) -> &MetricsReport {
        &self.summary.report
    }

    /// Header line, one line per document, summary line.
    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        let mut line = |l: TranscriptLine<'_>| {
            out.push_str(&serde_json::to_string(&l).expect("transcript serializes"));
            out.push('\n');
        };
        line(TranscriptLine::Header(&self.header));
        for r in &self.records {
            line(TranscriptLine::Document(r));
        }
        line(TranscriptLine::Summary(&self.summary));
        out
    }

    /// Predictions as a corpus, ungrounded answers left out.
    pub fn predicted_corpus(&self, gold: &Corpus) -> Corpus {
        let docs = self
            .records
            .iter()
            .map(|r| {
                let g = gold.get(&r.doc_id).expect("record belongs to gold");
                let spans = r.predictions.iter().filter_map(|p| p.span.clone()).collect();
                Document::new(g.doc_id(), g.source(), g.text(), spans).expect("grounded spans are disjoint")
            })
            .collect();
        Corpus::new(format!("{}-predicted", gold.name()), docs).expect("ids unique")
    }
}

pub fn prompt_fingerprint<'a>(model_id: &str, prompts: impl IntoIterator<Item = &'a str>) -> String {
    let mut h = Sha256::new();
    h.update(model_id.as_bytes());
    for p in prompts {
        h.update([0u8]);
        h.update(p.as_bytes());
    }
    hex::encode(h.finalize())
}

/// Prompts for every document, in document order.
pub fn build_prompts(corpus: &Corpus, spec: &PromptSpec) -> Vec<(String, String)> {
    corpus
        .documents()
        .iter()
        .map(|d| (d.doc_id().to_string(), build_prompt(spec, d.text())))
        .collect()
}

/// Scores one answer against one gold document.
pub fn evaluate_response(
    gold: &Document,
    raw: &str,
    taxonomy: &Taxonomy,
    grounding: GroundingPolicy,
    type_level: bool,
) -> (ParseStatus, ParseDiagnostics, Vec<GroundedPrediction>, MatchCounts) {
    match parse_response(raw, taxonomy) {
        Ok(parsed) => {
            let preds = if type_level {
                dedupe_type_level(&parsed.predictions)
            } else {
                parsed.predictions
            };
            let grounded = ground(&preds, gold.text(), grounding);
            let counts = count_grounded(gold, &grounded);
            (ParseStatus::Parsed, parsed.diagnostics, grounded, counts)
        }
        Err(_) => (
            ParseStatus::Unparseable,
            ParseDiagnostics::default(),
            Vec::new(),
            count_spans(gold.spans(), &[]),
        ),
    }
}

/// Grounded spans are matched strictly; every ungrounded answer is one more
/// false positive under its label, or out-of-taxonomy when it has none.
pub fn count_grounded(gold: &Document, grounded: &[GroundedPrediction]) -> MatchCounts {
    let spans: Vec<_> = grounded.iter().filter_map(|g| g.span.clone()).collect();
    let mut counts = count_spans(gold.spans(), &spans);
    for g in grounded.iter().filter(|g| g.span.is_none()) {
        match g.origin.label {
            Some(l) => counts.add_false_positive(l),
            None => counts.add_out_of_taxonomy(),
        }
    }
    counts
}

struct Outcome {
    record: DocumentRecord,
    counts: MatchCounts,
    latency: Duration,
}

fn run_one(
    doc: &Document,
    prompt: String,
    client: &dyn ModelClient,
    settings: &BenchSettings,
    taxonomy: &Taxonomy,
) -> Result<Outcome, BenchError> {
    let started = Instant::now();
    let request = CompletionRequest {
        model_id: &settings.model_id,
        prompt: &prompt,
        decoding: settings.decoding,
    };
    let reply = complete_with_retry(client, &request, settings.retry);
    let latency = started.elapsed();
    let prompt_sha256 = sha256_hex(&prompt);
    let (raw, attempts, error) = match reply {
        Ok((raw, attempts)) => (Some(raw), attempts, None),
        Err(ClientError::Transport { attempts, message, .. }) => (None, attempts, Some(message)),
        Err(source) => {
            return Err(BenchError::Client {
                doc_id: doc.doc_id().to_string(),
                source,
            })
        }
    };
    let (status, diagnostics, predictions, counts) = match &raw {
        Some(r) => evaluate_response(doc, r, taxonomy, settings.grounding, settings.type_level),
        None => (
            ParseStatus::TransportFailed,
            ParseDiagnostics::default(),
            Vec::new(),
            count_spans(doc.spans(), &[]),
        ),
    };
    let error = error.or_else(|| (status == ParseStatus::Unparseable).then(|| "no name/label list found".into()));
    Ok(Outcome {
        record: DocumentRecord {
            doc_id: doc.doc_id().to_string(),
            prompt_sha256,
            prompt,
            raw_response: raw,
            status,
            attempts,
            error,
            diagnostics,
            predictions,
            counts: counts.total(),
            out_of_taxonomy: counts.out_of_taxonomy,
        },
        counts,
        latency,
    })
}

/// Prompts every document, parses and grounds the answers, and scores them.
/// Up to `max_in_flight` requests run at once; results are aggregated in
/// doc_id order, so the outcome does not depend on completion order.
pub fn run_benchmark(
    corpus: &Corpus,
    spec: &PromptSpec,
    client: &dyn ModelClient,
    settings: &BenchSettings,
    taxonomy: &Taxonomy,
) -> Result<BenchRun, BenchError> {
    if corpus.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let started = Instant::now();
    let mut docs: Vec<&Document> = corpus.documents().iter().collect();
    docs.sort_by(|a, b| a.doc_id().cmp(b.doc_id()));
    let prompts: Vec<String> = docs.iter().map(|d| build_prompt(spec, d.text())).collect();
    let fingerprint = prompt_fingerprint(&settings.model_id, prompts.iter().map(String::as_str));

    let slots: Vec<Mutex<Option<Result<Outcome, BenchError>>>> = docs.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = settings.max_in_flight.clamp(1, docs.len());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= docs.len() {
                    break;
                }
                let out = run_one(docs[i], prompts[i].clone(), client, settings, taxonomy);
                *slots[i].lock().unwrap() = Some(out);
            });
        }
    });

    let mut records = Vec::with_capacity(docs.len());
    let mut counts = MatchCounts::default();
    let mut per_document = Vec::with_capacity(docs.len());
    for slot in slots {
        let outcome = slot.into_inner().unwrap().expect("every slot filled")?;
        counts.merge(&outcome.counts);
        per_document.push(outcome.latency);
        records.push(outcome.record);
    }
    let status_count = |s: ParseStatus| records.iter().filter(|r| r.status == s).count();
    let ungrounded = records
        .iter()
        .flat_map(|r| &r.predictions)
        .filter(|p| p.note == GroundingNote::Ungrounded)
        .count();
    let summary = RunSummary {
        parsed: status_count(ParseStatus::Parsed),
        unparseable: status_count(ParseStatus::Unparseable),
        transport_failed: status_count(ParseStatus::TransportFailed),
        ungrounded,
        report: MetricsReport::from_counts(&counts, docs.len(), None),
    };
    Ok(BenchRun {
        header: RunHeader {
            model_id: settings.model_id.clone(),
            mode: spec.mode(),
            fingerprint,
            documents: docs.len(),
            decoding: settings.decoding,
            grounding: settings.grounding,
            type_level: settings.type_level,
        },
        records,
        counts,
        summary,
        timing: Timing {
            elapsed: started.elapsed(),
            per_document,
        },
    })
}

//! LLM benchmark protocol: prompt templates, model clients with a replay
//! cache, tolerant answer parsing, grounding and scoring.

mod cache;
mod client;
mod ground;
mod prompt;
mod response;
mod run;

pub use cache::{cache_key, sha256_hex, CacheError, CacheRecord, RecordingClient, ReplayCache, ReplayClient};
pub use client::{
    complete_with_retry, ClientError, CompletionRequest, Decoding, HttpClient, ModelClient, RetryPolicy, ScriptedClient,
};
pub use ground::{dedupe_type_level, ground, Alignment, GroundedPrediction, GroundingNote, GroundingPolicy};
pub use prompt::{build_prompt, render_example, PromptError, PromptMode, PromptSpec, FEWSHOT_CONNECTOR, INSTRUCTION};
pub use response::{parse_response, ParseDiagnostics, ParsedResponse, RawPrediction, Repair, Unparseable};
pub use run::{
    build_prompts, count_grounded, evaluate_response, prompt_fingerprint, run_benchmark, BenchError, BenchRun,
    BenchSettings, DocumentRecord, ParseStatus, RunHeader, RunSummary, Timing,
};

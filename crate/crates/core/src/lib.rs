//! Named-entity toolkit for luxury-industry text: a 37-label taxonomy,
//! span annotations with a BIO codec, corpus formats, strict mention-level
//! scoring, an LLM benchmarking harness and training-data exports.

pub mod annotation;
pub mod corpus_io;
pub mod fixtures;
pub mod llm_bench;
pub mod report;
pub mod scorer;
pub mod taxonomy;
pub mod train_export;

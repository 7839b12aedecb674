//! Corpus container, the three on-disk formats and label statistics.
//!
//! - inline: `{surface|Label}` markup, lossless
//! - columns: `token<TAB>tag` per line, lossy on inter-token whitespace
//! - records: one JSON document per line, the canonical persistence format

mod columns;
mod inline;
mod records;
mod stats;

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::annotation::{AnnotationError, Document};
use crate::taxonomy::{Taxonomy, TaxonomyError};

pub use columns::{emit_columns, emit_columns_corpus, parse_columns, parse_columns_corpus};
pub use inline::{emit_inline, emit_inline_corpus, parse_inline, parse_inline_corpus};
pub use records::{emit_records, parse_records, read_records, write_records};
pub use stats::{corpus_stats, LabelHistogram};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {source}")]
    Label {
        line: usize,
        #[source]
        source: TaxonomyError,
    },
    #[error("line {line}: {source}")]
    Annotation {
        line: usize,
        #[source]
        source: AnnotationError,
    },
    #[error("malformed record at line {line}: {message}")]
    MalformedRecord { line: usize, message: String },
    #[error("duplicate document id {0:?}")]
    DuplicateDocId(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CorpusError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Named list of documents with unique ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    name: String,
    documents: Vec<Document>,
}

impl Corpus {
    pub fn new(name: impl Into<String>, documents: Vec<Document>) -> Result<Corpus, CorpusError> {
        let mut seen = HashSet::new();
        for d in &documents {
            if !seen.insert(d.doc_id()) {
                return Err(CorpusError::DuplicateDocId(d.doc_id().to_string()));
            }
        }
        Ok(Corpus {
            name: name.into(),
            documents,
        })
    }

    pub fn empty(name: impl Into<String>) -> Corpus {
        Corpus {
            name: name.into(),
            documents: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn into_documents(self) -> Vec<Document> {
        self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id() == doc_id)
    }

    /// Total number of gold mentions.
    pub fn mention_count(&self) -> usize {
        self.documents.iter().map(|d| d.spans().len()).sum()
    }

    /// Appends another corpus; doc ids must stay unique.
    pub fn concat(mut self, other: Corpus) -> Result<Corpus, CorpusError> {
        self.documents.extend(other.documents);
        Corpus::new(self.name, self.documents)
    }

    pub fn lowercased(&self) -> Corpus {
        Corpus {
            name: self.name.clone(),
            documents: self.documents.iter().map(Document::lowercased).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Inline,
    Columns,
    Records,
}

impl Format {
    /// Guess from the file extension: `.inline`/`.txt`, `.conll`/`.tsv`/`.columns`,
    /// `.jsonl`/`.records`.
    pub fn from_path(path: &Path) -> Option<Format> {
        match path.extension()?.to_str()? {
            "inline" | "txt" => Some(Format::Inline),
            "conll" | "tsv" | "columns" | "bio" => Some(Format::Columns),
            "jsonl" | "records" => Some(Format::Records),
            _ => None,
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Inline => "inline",
            Format::Columns => "columns",
            Format::Records => "records",
        })
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "inline" => Ok(Format::Inline),
            "columns" => Ok(Format::Columns),
            "records" => Ok(Format::Records),
            other => Err(format!("unknown format {other:?} (expected inline, columns or records)")),
        }
    }
}

/// Options for reading corpora in any format.
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    pub repair: crate::annotation::RepairMode,
}

pub fn parse_corpus(
    name: &str,
    text: &str,
    format: Format,
    taxonomy: &Taxonomy,
    options: ReadOptions,
) -> Result<Corpus, CorpusError> {
    match format {
        Format::Inline => parse_inline_corpus(name, text, taxonomy),
        Format::Columns => parse_columns_corpus(name, text, taxonomy, options.repair),
        Format::Records => parse_records(name, text, taxonomy),
    }
}

pub fn emit_corpus(corpus: &Corpus, format: Format) -> String {
    match format {
        Format::Inline => emit_inline_corpus(corpus),
        Format::Columns => emit_columns_corpus(corpus),
        Format::Records => emit_records(corpus),
    }
}

pub fn read_corpus(
    path: &Path,
    format: Format,
    taxonomy: &Taxonomy,
    options: ReadOptions,
) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("corpus")
        .to_string();
    parse_corpus(&name, &text, format, taxonomy, options)
}

pub fn write_corpus(corpus: &Corpus, path: &Path, format: Format) -> Result<(), CorpusError> {
    std::fs::write(path, emit_corpus(corpus, format)).map_err(|e| CorpusError::io(path, e))
}

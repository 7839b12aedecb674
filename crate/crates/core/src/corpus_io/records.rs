//! JSON lines, one document per line:
//! `{"doc_id":..,"source":..,"text":..,"spans":[[start,end,"Label"],..]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{Document, EntitySpan};
use crate::taxonomy::Taxonomy;

use super::{Corpus, CorpusError};

#[derive(Serialize)]
struct RecordOut<'a> {
    doc_id: &'a str,
    source: &'a str,
    text: &'a str,
    spans: Vec<(usize, usize, &'static str)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordIn {
    doc_id: String,
    #[serde(default)]
    source: String,
    text: String,
    #[serde(default)]
    spans: Vec<(usize, usize, String)>,
}

pub fn emit_records(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in corpus.documents() {
        let record = RecordOut {
            doc_id: doc.doc_id(),
            source: doc.source(),
            text: doc.text(),
            spans: doc
                .spans()
                .iter()
                .map(|s| (s.start, s.end, s.label.canonical_name()))
                .collect(),
        };
        out.push_str(&serde_json::to_string(&record).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Blank lines are skipped; labels go through alias normalization.
pub fn parse_records(name: &str, text: &str, taxonomy: &Taxonomy) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let record: RecordIn = serde_json::from_str(line).map_err(|e| CorpusError::MalformedRecord {
            line: line_no,
            message: e.to_string(),
        })?;
        let len = record.text.chars().count();
        let mut spans = Vec::with_capacity(record.spans.len());
        for (start, end, label) in record.spans {
            let label = taxonomy
                .normalize(&label)
                .map_err(|source| CorpusError::Label { line: line_no, source })?;
            if start > end || end > len {
                return Err(CorpusError::Annotation {
                    line: line_no,
                    source: crate::annotation::AnnotationError::SpanOutOfBounds {
                        doc_id: record.doc_id.clone(),
                        start,
                        end,
                        len,
                    },
                });
            }
            spans.push(EntitySpan::from_text(&record.text, start, end, label));
        }
        let doc = Document::new(record.doc_id, record.source, record.text, spans)
            .map_err(|source| CorpusError::Annotation { line: line_no, source })?;
        documents.push(doc);
    }
    Corpus::new(name, documents)
}

pub fn read_records(path: &Path, taxonomy: &Taxonomy) -> Result<Corpus, CorpusError> {
    let text = std::fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("corpus");
    parse_records(name, &text, taxonomy)
}

pub fn write_records(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    std::fs::write(path, emit_records(corpus)).map_err(|e| CorpusError::io(path, e))
}

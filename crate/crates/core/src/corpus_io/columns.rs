//! Two-column token/tag format.
//!
//! Each token line is `token<TAB>tag`. Documents are separated by blank
//! lines and may be preceded by `# doc_id = ...` and `# source = ...`
//! comments. Reading rebuilds the text by joining tokens with one space,
//! so the original whitespace is not preserved.

use crate::annotation::{
    decode_bio, encode_bio, repair_iob, tokenize, BioTag, BoundaryPolicy, Document, RepairMode,
    TaggedSequence, Token,
};
use crate::taxonomy::Taxonomy;

use super::{Corpus, CorpusError};

/// Tokens and tags for one document, tokens from [`tokenize`] and spans
/// widened to token edges where they cut a token.
pub fn emit_columns(doc: &Document) -> String {
    let tokens = tokenize(doc.text());
    let encoded = encode_bio(doc, &tokens, BoundaryPolicy::ExpandToToken)
        .expect("expanding encoder accepts every valid document");
    let mut out = String::new();
    for (tok, tag) in encoded.sequence.tokens().iter().zip(encoded.sequence.tags()) {
        out.push_str(&tok.text);
        out.push('\t');
        out.push_str(&tag.to_string());
        out.push('\n');
    }
    out
}

pub fn emit_columns_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, doc) in corpus.documents().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("# doc_id = ");
        out.push_str(doc.doc_id());
        out.push('\n');
        if !doc.source().is_empty() {
            out.push_str("# source = ");
            out.push_str(doc.source());
            out.push('\n');
        }
        out.push_str(&emit_columns(doc));
    }
    out
}

struct Block {
    doc_id: Option<String>,
    source: String,
    rows: Vec<(usize, String, String)>,
    first_line: usize,
}

fn build_document(
    block: Block,
    fallback_id: String,
    taxonomy: &Taxonomy,
    repair: RepairMode,
) -> Result<Document, CorpusError> {
    let line = block.first_line;
    let mut text = String::new();
    let mut tokens = Vec::with_capacity(block.rows.len());
    let mut tags = Vec::with_capacity(block.rows.len());
    let mut pos = 0;
    for (row_line, token, tag) in block.rows {
        if !text.is_empty() {
            text.push(' ');
            pos += 1;
        }
        let len = token.chars().count();
        text.push_str(&token);
        tokens.push(Token {
            text: token,
            start: pos,
            end: pos + len,
        });
        pos += len;
        let tag = BioTag::parse_with(&tag, taxonomy)
            .map_err(|source| CorpusError::Annotation { line: row_line, source })?;
        tags.push(tag);
    }
    let tags = repair_iob(&tags, repair).map_err(|source| CorpusError::Annotation { line, source })?;
    let annotate = |source| CorpusError::Annotation { line, source };
    let seq = TaggedSequence::new(tokens, tags).map_err(annotate)?;
    let spans = decode_bio(&seq, &text).map_err(annotate)?;
    Document::new(block.doc_id.unwrap_or(fallback_id), block.source, text, spans).map_err(annotate)
}

fn parse_blocks(text: &str) -> Result<Vec<Block>, CorpusError> {
    let mut blocks = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if let Some(b) = current.take() {
                blocks.push(b);
            }
            continue;
        }
        let block = current.get_or_insert_with(|| Block {
            doc_id: None,
            source: String::new(),
            rows: Vec::new(),
            first_line: line_no,
        });
        match line.split_once('\t') {
            Some((token, tag)) => {
                if token.is_empty() || token.contains(char::is_whitespace) {
                    return Err(CorpusError::Syntax {
                        line: line_no,
                        column: 1,
                        message: format!("invalid token {token:?}"),
                    });
                }
                block.rows.push((line_no, token.to_string(), tag.trim().to_string()));
            }
            None => {
                let Some(comment) = line.strip_prefix('#') else {
                    return Err(CorpusError::Syntax {
                        line: line_no,
                        column: 1,
                        message: "expected 'token<TAB>tag'".into(),
                    });
                };
                if let Some((key, value)) = comment.split_once('=') {
                    match key.trim() {
                        "doc_id" => block.doc_id = Some(value.trim().to_string()),
                        "source" => block.source = value.trim().to_string(),
                        _ => {}
                    }
                }
            }
        }
    }
    blocks.extend(current);
    Ok(blocks)
}

/// Parses a single document; any comment lines are honoured.
pub fn parse_columns(text: &str, taxonomy: &Taxonomy, repair: RepairMode) -> Result<Document, CorpusError> {
    let mut block = Block {
        doc_id: None,
        source: String::new(),
        rows: Vec::new(),
        first_line: 1,
    };
    for b in parse_blocks(text)? {
        if block.doc_id.is_none() {
            block.doc_id = b.doc_id;
        }
        if block.source.is_empty() {
            block.source = b.source;
        }
        block.rows.extend(b.rows);
    }
    build_document(block, "doc".into(), taxonomy, repair)
}

/// Documents without a `# doc_id` comment are numbered `doc-0001`, `doc-0002`, ...
pub fn parse_columns_corpus(
    name: &str,
    text: &str,
    taxonomy: &Taxonomy,
    repair: RepairMode,
) -> Result<Corpus, CorpusError> {
    let documents = parse_blocks(text)?
        .into_iter()
        .enumerate()
        .map(|(i, b)| build_document(b, format!("doc-{:04}", i + 1), taxonomy, repair))
        .collect::<Result<Vec<_>, _>>()?;
    Corpus::new(name, documents)
}

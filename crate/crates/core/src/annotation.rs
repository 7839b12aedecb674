//! Documents with character-offset entity spans, the evaluation tokenizer,
//! and the BIO/IOB2 codec between spans and per-token tags.
//!
//! All offsets count Unicode scalar values, so `"Hermès"` has length 6.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::taxonomy::{Label, Taxonomy, TaxonomyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnnotationError {
    #[error("document {doc_id}: span {start}..{end} out of bounds for text of length {len}")]
    SpanOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("document {doc_id}: spans {first:?} and {second:?} overlap or are out of order")]
    SpanOverlap {
        doc_id: String,
        first: (usize, usize),
        second: (usize, usize),
    },
    #[error("document {doc_id}: span {start}..{end} carries the Outside label")]
    OutsideSpan {
        doc_id: String,
        start: usize,
        end: usize,
    },
    #[error("document {doc_id}: span surface {surface:?} does not match text slice {slice:?}")]
    SurfaceMismatch {
        doc_id: String,
        surface: String,
        slice: String,
    },
    #[error("document id {0:?} must be non-empty and free of tabs and newlines")]
    InvalidDocId(String),
    #[error("document {0}: source must not contain tabs or newlines")]
    InvalidSource(String),
    #[error("span {span:?} boundary falls inside token {token:?}")]
    BoundaryMismatch {
        span: (usize, usize, Label),
        token: (usize, usize, String),
    },
    #[error("invalid IOB2 sequence at position {position}: {tag} follows {previous}")]
    InvalidSequence {
        position: usize,
        tag: String,
        previous: String,
    },
    #[error("tokens and tags differ in length ({tokens} vs {tags})")]
    LengthMismatch { tokens: usize, tags: usize },
    #[error("bad tag {tag:?}: {reason}")]
    BadTag { tag: String, reason: String },
}

/// Character-offset helpers.
pub(crate) fn char_len(s: &str) -> usize {
    s.chars().count()
}

/// Slice `text` by scalar-value offsets. Panics if out of range.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let mut indices = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let b_start = indices.nth(start).expect("start within text");
    let b_end = if end == start {
        b_start
    } else {
        indices.nth(end - start - 1).expect("end within text")
    };
    &text[b_start..b_end]
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: Label,
    pub surface: String,
}

impl EntitySpan {
    /// Builds a span reading its surface out of `text`.
    pub fn from_text(text: &str, start: usize, end: usize, label: Label) -> EntitySpan {
        EntitySpan {
            start,
            end,
            label,
            surface: char_slice(text, start, end).to_string(),
        }
    }

    pub fn overlaps(&self, other: &EntitySpan) -> bool {
        self.start < other.end && other.start < self.end
    }

    pub fn key(&self) -> (usize, usize, Label) {
        (self.start, self.end, self.label)
    }
}

/// One benchmark unit: text plus sorted, non-overlapping entity spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Document {
    doc_id: String,
    source: String,
    text: String,
    spans: Vec<EntitySpan>,
}

impl Document {
    /// Validates every document invariant. Spans are sorted by start first.
    pub fn new(
        doc_id: impl Into<String>,
        source: impl Into<String>,
        text: impl Into<String>,
        mut spans: Vec<EntitySpan>,
    ) -> Result<Document, AnnotationError> {
        let doc_id = doc_id.into();
        let source = source.into();
        let text = text.into();
        if doc_id.is_empty() || doc_id.contains(['\t', '\n', '\r']) {
            return Err(AnnotationError::InvalidDocId(doc_id));
        }
        if source.contains(['\t', '\n', '\r']) {
            return Err(AnnotationError::InvalidSource(doc_id));
        }
        spans.sort_by_key(|s| (s.start, s.end));
        let len = char_len(&text);
        for span in &spans {
            if span.start >= span.end || span.end > len {
                return Err(AnnotationError::SpanOutOfBounds {
                    doc_id,
                    start: span.start,
                    end: span.end,
                    len,
                });
            }
            if span.label.is_outside() {
                return Err(AnnotationError::OutsideSpan {
                    doc_id,
                    start: span.start,
                    end: span.end,
                });
            }
            let slice = char_slice(&text, span.start, span.end);
            if slice != span.surface {
                return Err(AnnotationError::SurfaceMismatch {
                    doc_id,
                    surface: span.surface.clone(),
                    slice: slice.to_string(),
                });
            }
        }
        for pair in spans.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(AnnotationError::SpanOverlap {
                    doc_id,
                    first: (pair[0].start, pair[0].end),
                    second: (pair[1].start, pair[1].end),
                });
            }
        }
        Ok(Document {
            doc_id,
            source,
            text,
            spans,
        })
    }

    /// Builds from `(start, end, label)` triples, reading surfaces from the text.
    pub fn from_offsets(
        doc_id: impl Into<String>,
        source: impl Into<String>,
        text: impl Into<String>,
        offsets: &[(usize, usize, Label)],
    ) -> Result<Document, AnnotationError> {
        let doc_id = doc_id.into();
        let text = text.into();
        let len = char_len(&text);
        let mut spans = Vec::with_capacity(offsets.len());
        for &(start, end, label) in offsets {
            if start >= end || end > len {
                return Err(AnnotationError::SpanOutOfBounds {
                    doc_id,
                    start,
                    end,
                    len,
                });
            }
            spans.push(EntitySpan::from_text(&text, start, end, label));
        }
        Document::new(doc_id, source, text, spans)
    }

    pub fn doc_id(&self) -> &str {
        &self.doc_id
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn spans(&self) -> &[EntitySpan] {
        &self.spans
    }

    /// Number of scalar values in the text.
    pub fn len(&self) -> usize {
        char_len(&self.text)
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    /// Same document with different spans over the same text.
    pub fn with_spans(&self, spans: Vec<EntitySpan>) -> Result<Document, AnnotationError> {
        Document::new(self.doc_id.clone(), self.source.clone(), self.text.clone(), spans)
    }

    /// Lowercases text and surfaces scalar by scalar. Scalars whose lowercase
    /// form is longer than one scalar are kept as-is so offsets stay valid.
    pub fn lowercased(&self) -> Document {
        let lower = |s: &str| -> String {
            s.chars()
                .map(|c| {
                    let mut it = c.to_lowercase();
                    match (it.next(), it.next()) {
                        (Some(l), None) => l,
                        _ => c,
                    }
                })
                .collect()
        };
        Document {
            doc_id: self.doc_id.clone(),
            source: self.source.clone(),
            text: lower(&self.text),
            spans: self
                .spans
                .iter()
                .map(|s| EntitySpan {
                    surface: lower(&s.surface),
                    ..s.clone()
                })
                .collect(),
        }
    }
}

#[derive(Deserialize)]
struct RawDocument {
    doc_id: String,
    source: String,
    text: String,
    spans: Vec<EntitySpan>,
}

impl<'de> Deserialize<'de> for Document {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = RawDocument::deserialize(deserializer)?;
        Document::new(raw.doc_id, raw.source, raw.text, raw.spans).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub start: usize,
    pub end: usize,
}

fn is_word_char(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        UppercaseLetter
            | LowercaseLetter
            | TitlecaseLetter
            | ModifierLetter
            | OtherLetter
            | NonspacingMark
            | SpacingMark
            | EnclosingMark
            | DecimalNumber
            | LetterNumber
    )
}

/// Offset-preserving word segmentation. Maximal runs of letters, decimal
/// digits and combining marks form one token; every other non-whitespace
/// scalar is a token by itself.
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run: Option<(usize, usize)> = None; // (char start, byte start)
    let mut char_idx = 0;
    let flush = |run: &mut Option<(usize, usize)>, end_char: usize, end_byte: usize, tokens: &mut Vec<Token>| {
        if let Some((cs, bs)) = run.take() {
            tokens.push(Token {
                text: text[bs..end_byte].to_string(),
                start: cs,
                end: end_char,
            });
        }
    };
    for (byte_idx, c) in text.char_indices() {
        if is_word_char(c) {
            if run.is_none() {
                run = Some((char_idx, byte_idx));
            }
        } else {
            flush(&mut run, char_idx, byte_idx, &mut tokens);
            if !c.is_whitespace() {
                tokens.push(Token {
                    text: c.to_string(),
                    start: char_idx,
                    end: char_idx + 1,
                });
            }
        }
        char_idx += 1;
    }
    flush(&mut run, char_idx, text.len(), &mut tokens);
    tokens
}

/// One BIO tag. `B`/`I` always carry an entity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BioTag {
    O,
    B(Label),
    I(Label),
}

impl BioTag {
    pub fn label(self) -> Option<Label> {
        match self {
            BioTag::O => None,
            BioTag::B(l) | BioTag::I(l) => Some(l),
        }
    }

    /// Parses `O`, `B-<label>` or `I-<label>`, resolving the label through
    /// the taxonomy's aliases.
    pub fn parse_with(raw: &str, taxonomy: &Taxonomy) -> Result<BioTag, AnnotationError> {
        let bad = |reason: &str| AnnotationError::BadTag {
            tag: raw.to_string(),
            reason: reason.to_string(),
        };
        if raw == "O" {
            return Ok(BioTag::O);
        }
        let (kind, rest) = raw
            .split_once('-')
            .ok_or_else(|| bad("expected O, B-<label> or I-<label>"))?;
        let label = taxonomy.normalize(rest).map_err(|e| match e {
            TaxonomyError::UnknownLabel(l) => bad(&format!("unknown label {l:?}")),
            other => bad(&other.to_string()),
        })?;
        if label.is_outside() {
            return Err(bad("B-/I- tags cannot carry the Outside label"));
        }
        match kind {
            "B" => Ok(BioTag::B(label)),
            "I" => Ok(BioTag::I(label)),
            _ => Err(bad("prefix must be B or I")),
        }
    }
}

impl fmt::Display for BioTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BioTag::O => f.write_str("O"),
            BioTag::B(l) => write!(f, "B-{l}"),
            BioTag::I(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for BioTag {
    type Err = AnnotationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BioTag::parse_with(s, crate::taxonomy::builtin_taxonomy())
    }
}

impl Serialize for BioTag {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BioTag {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Checks that every `I-X` directly follows `B-X` or `I-X`.
pub fn validate_iob2(tags: &[BioTag]) -> Result<(), AnnotationError> {
    let mut prev = BioTag::O;
    for (position, &tag) in tags.iter().enumerate() {
        if let BioTag::I(l) = tag {
            let ok = matches!(prev, BioTag::B(p) | BioTag::I(p) if p == l);
            if !ok {
                return Err(AnnotationError::InvalidSequence {
                    position,
                    tag: tag.to_string(),
                    previous: if position == 0 {
                        "start of sequence".to_string()
                    } else {
                        prev.to_string()
                    },
                });
            }
        }
        prev = tag;
    }
    Ok(())
}

/// Tokens paired with IOB2-valid tags.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedSequence {
    tokens: Vec<Token>,
    tags: Vec<BioTag>,
}

impl TaggedSequence {
    pub fn new(tokens: Vec<Token>, tags: Vec<BioTag>) -> Result<TaggedSequence, AnnotationError> {
        if tokens.len() != tags.len() {
            return Err(AnnotationError::LengthMismatch {
                tokens: tokens.len(),
                tags: tags.len(),
            });
        }
        validate_iob2(&tags)?;
        Ok(TaggedSequence { tokens, tags })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn tags(&self) -> &[BioTag] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// A span boundary inside a token is an error.
    #[default]
    Strict,
    /// Widen the span to the enclosing token edges and record a warning.
    ExpandToToken,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EncodeWarning {
    /// The span was widened to `widened` to align with token edges.
    Expanded {
        span: (usize, usize, Label),
        widened: (usize, usize),
    },
    /// The span covers no token not already claimed by an earlier span.
    Dropped { span: (usize, usize, Label) },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoded {
    pub sequence: TaggedSequence,
    pub warnings: Vec<EncodeWarning>,
}

/// Assigns `B-X`/`I-X` to tokens covered by each span and `O` elsewhere.
pub fn encode_bio(
    doc: &Document,
    tokens: &[Token],
    policy: BoundaryPolicy,
) -> Result<Encoded, AnnotationError> {
    let mut tags = vec![BioTag::O; tokens.len()];
    let mut warnings = Vec::new();
    let mut cursor = 0; // first token that may still overlap the next span
    for span in doc.spans() {
        while cursor < tokens.len() && tokens[cursor].end <= span.start {
            cursor += 1;
        }
        let mut covered = Vec::new();
        let mut i = cursor;
        while i < tokens.len() && tokens[i].start < span.end {
            let tok = &tokens[i];
            let inside = tok.start >= span.start && tok.end <= span.end;
            if !inside && policy == BoundaryPolicy::Strict {
                return Err(AnnotationError::BoundaryMismatch {
                    span: span.key(),
                    token: (tok.start, tok.end, tok.text.clone()),
                });
            }
            covered.push(i);
            i += 1;
        }
        if let (Some(&first), Some(&last)) = (covered.first(), covered.last()) {
            let widened = (tokens[first].start, tokens[last].end);
            if widened != (span.start, span.end) && policy == BoundaryPolicy::ExpandToToken {
                warnings.push(EncodeWarning::Expanded {
                    span: span.key(),
                    widened,
                });
            }
        }
        // A widened predecessor may already own the leading tokens.
        covered.retain(|&t| tags[t] == BioTag::O);
        match covered.split_first() {
            Some((&first, rest)) => {
                tags[first] = BioTag::B(span.label);
                for &t in rest {
                    tags[t] = BioTag::I(span.label);
                }
            }
            None => warnings.push(EncodeWarning::Dropped { span: span.key() }),
        }
    }
    let sequence = TaggedSequence::new(tokens.to_vec(), tags)?;
    Ok(Encoded { sequence, warnings })
}

/// Turns each `B-X (I-X)*` run into one span over `text`.
pub fn decode_bio(seq: &TaggedSequence, text: &str) -> Result<Vec<EntitySpan>, AnnotationError> {
    validate_iob2(seq.tags())?;
    let mut spans = Vec::new();
    let mut open: Option<(usize, usize, Label)> = None;
    let close = |open: &mut Option<(usize, usize, Label)>, spans: &mut Vec<EntitySpan>| {
        if let Some((s, e, l)) = open.take() {
            spans.push(EntitySpan::from_text(text, s, e, l));
        }
    };
    for (tok, &tag) in seq.tokens().iter().zip(seq.tags()) {
        match tag {
            BioTag::O => close(&mut open, &mut spans),
            BioTag::B(l) => {
                close(&mut open, &mut spans);
                open = Some((tok.start, tok.end, l));
            }
            BioTag::I(_) => {
                if let Some(o) = open.as_mut() {
                    o.1 = tok.end;
                }
            }
        }
    }
    close(&mut open, &mut spans);
    Ok(spans)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RepairMode {
    /// Reject invalid sequences.
    #[default]
    Error,
    /// Turn every stray `I-X` into `B-X`.
    StrayItoB,
}

pub fn repair_iob(tags: &[BioTag], mode: RepairMode) -> Result<Vec<BioTag>, AnnotationError> {
    match mode {
        RepairMode::Error => {
            validate_iob2(tags)?;
            Ok(tags.to_vec())
        }
        RepairMode::StrayItoB => {
            let mut out = Vec::with_capacity(tags.len());
            let mut prev = BioTag::O;
            for &tag in tags {
                let fixed = match tag {
                    BioTag::I(l) if !matches!(prev, BioTag::B(p) | BioTag::I(p) if p == l) => {
                        BioTag::B(l)
                    }
                    t => t,
                };
                out.push(fixed);
                prev = fixed;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn words(tokens: &[Token]) -> Vec<&str> {
        tokens.iter().map(|t| t.text.as_str()).collect()
    }

    /// Independent character-class walk: classify each scalar, start a new
    /// token at every class change or standalone symbol.
    fn oracle_tokenize(text: &str) -> Vec<(String, usize, usize)> {
        #[derive(PartialEq, Clone, Copy)]
        enum Class {
            Word,
            Space,
            Other,
        }
        let class = |c: char| {
            if c.is_whitespace() {
                Class::Space
            } else if c.is_alphabetic() && !c.is_numeric()
                || c.is_ascii_digit()
                || unicode_normalization::char::is_combining_mark(c)
            {
                Class::Word
            } else {
                Class::Other
            }
        };
        let chars: Vec<char> = text.chars().collect();
        let mut out = Vec::new();
        let mut i = 0;
        while i < chars.len() {
            match class(chars[i]) {
                Class::Space => i += 1,
                Class::Other => {
                    out.push((chars[i].to_string(), i, i + 1));
                    i += 1;
                }
                Class::Word => {
                    let s = i;
                    while i < chars.len() && class(chars[i]) == Class::Word {
                        i += 1;
                    }
                    out.push((chars[s..i].iter().collect(), s, i));
                }
            }
        }
        out
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(
            words(&tokenize("Hermès International SCA")),
            ["Hermès", "International", "SCA"]
        );
        let euro = tokenize("€1.7 billion");
        assert_eq!(words(&euro), ["€", "1", ".", "7", "billion"]);
        let oracle = oracle_tokenize("€1.7 billion");
        assert_eq!(
            euro.iter().map(|t| (t.text.clone(), t.start, t.end)).collect::<Vec<_>>(),
            oracle
        );
        assert!(tokenize("").is_empty());
    }

    #[test]
    fn tokenize_scripts_and_symbols() {
        assert_eq!(words(&tokenize("Dsquared²")), ["Dsquared", "²"]);
        assert_eq!(words(&tokenize("L'Oréal")), ["L", "'", "Oréal"]);
        assert_eq!(words(&tokenize("ルイ・ヴィトン")), ["ルイ", "・", "ヴィトン"]);
        assert_eq!(words(&tokenize("Moonshine™ Gold")), ["Moonshine", "™", "Gold"]);
        // decomposed e + combining grave stays in the word
        assert_eq!(words(&tokenize("Herme\u{300}s")), ["Herme\u{300}s"]);
        let t = tokenize("Hermès x");
        assert_eq!((t[0].start, t[0].end, t[1].start), (0, 6, 7));
    }

    #[test]
    fn encode_examples() {
        let doc = Document::from_offsets("d", "", "Kering announced", &[(0, 6, Label::ListedGroup)]).unwrap();
        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::Strict).unwrap();
        assert_eq!(enc.sequence.tags(), &[BioTag::B(Label::ListedGroup), BioTag::O]);

        let doc = Document::from_offsets("d", "", "Bernard Arnault", &[(0, 15, Label::Chairperson)]).unwrap();
        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::Strict).unwrap();
        assert_eq!(
            enc.sequence.tags(),
            &[BioTag::B(Label::Chairperson), BioTag::I(Label::Chairperson)]
        );

        let doc = Document::new("d", "", "no entities here", vec![]).unwrap();
        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::Strict).unwrap();
        assert!(enc.sequence.tags().iter().all(|t| *t == BioTag::O));
    }

    #[test]
    fn strict_rejects_partial_token() {
        let doc = Document::from_offsets("d", "", "European based", &[(0, 6, Label::Location)]).unwrap();
        let err = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::Strict).unwrap_err();
        assert!(matches!(err, AnnotationError::BoundaryMismatch { .. }));

        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::ExpandToToken).unwrap();
        assert_eq!(enc.sequence.tags(), &[BioTag::B(Label::Location), BioTag::O]);
        assert_eq!(
            enc.warnings,
            vec![EncodeWarning::Expanded {
                span: (0, 6, Label::Location),
                widened: (0, 8)
            }]
        );
    }

    #[test]
    fn expand_drops_span_swallowed_by_neighbour() {
        let doc = Document::from_offsets(
            "d",
            "",
            "abcd ef",
            &[(0, 2, Label::House), (2, 4, Label::Brand)],
        )
        .unwrap();
        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::ExpandToToken).unwrap();
        assert_eq!(enc.sequence.tags(), &[BioTag::B(Label::House), BioTag::O]);
        assert!(enc
            .warnings
            .contains(&EncodeWarning::Dropped { span: (2, 4, Label::Brand) }));
    }

    #[test]
    fn decode_examples() {
        let text = "Van Cleef today";
        let seq = TaggedSequence::new(
            tokenize(text),
            vec![BioTag::B(Label::House), BioTag::I(Label::House), BioTag::O],
        )
        .unwrap();
        let spans = decode_bio(&seq, text).unwrap();
        assert_eq!(spans, vec![EntitySpan::from_text(text, 0, 9, Label::House)]);
        assert_eq!(spans[0].surface, "Van Cleef");

        let seq = TaggedSequence::new(tokenize(text), vec![BioTag::O; 3]).unwrap();
        assert!(decode_bio(&seq, text).unwrap().is_empty());
    }

    #[test]
    fn adjacent_same_label_spans_stay_apart() {
        let doc = Document::from_offsets(
            "d",
            "",
            "Fiscal 2023 performance",
            &[(0, 6, Label::Date), (7, 11, Label::Date)],
        )
        .unwrap();
        let enc = encode_bio(&doc, &tokenize(doc.text()), BoundaryPolicy::Strict).unwrap();
        assert_eq!(
            enc.sequence.tags(),
            &[BioTag::B(Label::Date), BioTag::B(Label::Date), BioTag::O]
        );
        assert_eq!(decode_bio(&enc.sequence, doc.text()).unwrap(), doc.spans());
    }

    #[test]
    fn sequence_rejects_stray_inside() {
        let err = TaggedSequence::new(tokenize("a b"), vec![BioTag::O, BioTag::I(Label::House)]).unwrap_err();
        assert!(matches!(err, AnnotationError::InvalidSequence { position: 1, .. }));
        let err = TaggedSequence::new(tokenize("a b"), vec![BioTag::O]).unwrap_err();
        assert!(matches!(err, AnnotationError::LengthMismatch { .. }));
    }

    #[test]
    fn repair_examples() {
        use BioTag::*;
        let h = Label::House;
        assert_eq!(repair_iob(&[O, I(h)], RepairMode::StrayItoB).unwrap(), vec![O, B(h)]);
        assert_eq!(
            repair_iob(&[B(Label::Brand), I(h)], RepairMode::StrayItoB).unwrap(),
            vec![B(Label::Brand), B(h)]
        );
        let valid = vec![B(h), I(h), O, B(Label::Date)];
        assert_eq!(repair_iob(&valid, RepairMode::StrayItoB).unwrap(), valid);
        assert_eq!(repair_iob(&valid, RepairMode::Error).unwrap(), valid);
        assert!(repair_iob(&[I(h)], RepairMode::Error).is_err());
    }

    #[test]
    fn document_invariants() {
        let text = "Kering announced";
        let overlap = Document::from_offsets(
            "d",
            "",
            text,
            &[(0, 6, Label::House), (3, 9, Label::Brand)],
        );
        assert!(matches!(overlap, Err(AnnotationError::SpanOverlap { .. })));
        assert!(matches!(
            Document::from_offsets("d", "", text, &[(0, 99, Label::House)]),
            Err(AnnotationError::SpanOutOfBounds { .. })
        ));
        assert!(matches!(
            Document::from_offsets("d", "", text, &[(0, 6, Label::Outside)]),
            Err(AnnotationError::OutsideSpan { .. })
        ));
        let bad_surface = EntitySpan {
            start: 0,
            end: 6,
            label: Label::House,
            surface: "Kerinx".into(),
        };
        assert!(matches!(
            Document::new("d", "", text, vec![bad_surface]),
            Err(AnnotationError::SurfaceMismatch { .. })
        ));
        assert!(Document::new("a\tb", "", text, vec![]).is_err());
        let unsorted = Document::from_offsets(
            "d",
            "",
            text,
            &[(7, 16, Label::Event), (0, 6, Label::House)],
        )
        .unwrap();
        assert_eq!(unsorted.spans()[0].start, 0);
    }

    #[test]
    fn diacritic_offsets_count_scalars() {
        let doc = Document::from_offsets("d", "", "Kering Beauté x", &[(7, 13, Label::PrivateCompany)]).unwrap();
        assert_eq!(doc.spans()[0].surface, "Beauté");
        assert_eq!(doc.len(), 15);
    }

    #[test]
    fn bio_tag_text_form() {
        let t: BioTag = "B-Listed Group".parse().unwrap();
        assert_eq!(t, BioTag::B(Label::ListedGroup));
        assert_eq!(t.to_string(), "B-ListedGroup");
        assert!("B-O".parse::<BioTag>().is_err());
        assert!("X-House".parse::<BioTag>().is_err());
        assert!("House".parse::<BioTag>().is_err());
    }

    #[test]
    fn lowercasing_keeps_offsets() {
        let doc = Document::from_offsets("d", "", "İstanbul Hermès", &[(9, 15, Label::House)]).unwrap();
        let low = doc.lowercased();
        assert_eq!(low.text(), "İstanbul hermès");
        assert_eq!(low.spans()[0].surface, "hermès");
        assert!(Document::new("d", "", low.text(), low.spans().to_vec()).is_ok());
    }

    fn arb_text() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[a-zA-Z]{1,6}",
                Just("Hermès".to_string()),
                Just("€".to_string()),
                Just(",".to_string()),
                Just("²".to_string()),
                Just("  ".to_string()),
                Just("\t".to_string()),
                "[0-9]{1,3}",
            ],
            0..12,
        )
        .prop_map(|parts| parts.join(" "))
    }

    proptest! {
        #[test]
        fn tokenize_is_offset_faithful(text in arb_text()) {
            let tokens = tokenize(&text);
            let mut rebuilt = String::new();
            let chars: Vec<char> = text.chars().collect();
            let mut pos = 0;
            for t in &tokens {
                prop_assert!(t.start >= pos && t.start < t.end);
                let gap: String = chars[pos..t.start].iter().collect();
                prop_assert!(gap.chars().all(char::is_whitespace));
                rebuilt.push_str(&gap);
                prop_assert_eq!(char_slice(&text, t.start, t.end), t.text.as_str());
                rebuilt.push_str(&t.text);
                pos = t.end;
            }
            let tail: String = chars[pos..].iter().collect();
            prop_assert!(tail.chars().all(char::is_whitespace));
            rebuilt.push_str(&tail);
            prop_assert_eq!(rebuilt, text.clone());
            let oracle = oracle_tokenize(&text);
            prop_assert_eq!(tokens.into_iter().map(|t| (t.text, t.start, t.end)).collect::<Vec<_>>(), oracle);
        }

        #[test]
        fn repair_is_idempotent_and_valid(raw in proptest::collection::vec((0u8..3, 1usize..5), 0..20)) {
            let tags: Vec<BioTag> = raw.iter().map(|&(k, l)| match k {
                0 => BioTag::O,
                1 => BioTag::B(Label::ALL[l]),
                _ => BioTag::I(Label::ALL[l]),
            }).collect();
            let once = repair_iob(&tags, RepairMode::StrayItoB).unwrap();
            prop_assert!(validate_iob2(&once).is_ok());
            let twice = repair_iob(&once, RepairMode::StrayItoB).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}

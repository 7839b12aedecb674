//! Inline markup: plain text with `{surface|Label}` annotations.
//!
//! Escapes: `\{` `\}` `\|` `\\` `\@` stand for themselves, `\n` and `\r`
//! for line breaks. A corpus file is a sequence of blocks, each a header
//! line `@@ <doc_id><TAB><source>` followed by exactly one markup line.

use crate::annotation::{Document, EntitySpan};
use crate::taxonomy::Taxonomy;

use super::{Corpus, CorpusError};

const HEADER: &str = "@@ ";

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CorpusError {
    CorpusError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn unescape(c: Option<char>, line: usize, column: usize) -> Result<char, CorpusError> {
    match c {
        Some(c @ ('{' | '}' | '|' | '\\' | '@')) => Ok(c),
        Some('n') => Ok('\n'),
        Some('r') => Ok('\r'),
        Some(other) => Err(syntax(line, column, format!("unknown escape \\{other}"))),
        None => Err(syntax(line, column, "dangling backslash")),
    }
}

/// Parses markup from a line of a corpus file (`line` only affects error
/// positions).
fn parse_markup(
    doc_id: &str,
    source: &str,
    markup: &str,
    taxonomy: &Taxonomy,
    line: usize,
) -> Result<Document, CorpusError> {
    let mut text = String::with_capacity(markup.len());
    let mut text_len = 0usize;
    let mut spans = Vec::new();
    let mut chars = markup.chars().enumerate().peekable();

    while let Some((col, c)) = chars.next() {
        match c {
            '\\' => {
                let e = unescape(chars.next().map(|(_, c)| c), line, col + 1)?;
                text.push(e);
                text_len += 1;
            }
            '}' => return Err(syntax(line, col + 1, "unbalanced '}'")),
            '{' => {
                let open_col = col + 1;
                let start = text_len;
                let mut surface = String::new();
                let mut found_bar = false;
                while let Some((col, c)) = chars.next() {
                    match c {
                        '\\' => {
                            let e = unescape(chars.next().map(|(_, c)| c), line, col + 1)?;
                            surface.push(e);
                        }
                        '|' => {
                            found_bar = true;
                            break;
                        }
                        '{' => return Err(syntax(line, col + 1, "nested '{' inside annotation")),
                        '}' => return Err(syntax(line, col + 1, "annotation is missing '|label'")),
                        c => surface.push(c),
                    }
                }
                if !found_bar {
                    return Err(syntax(line, open_col, "unbalanced '{'"));
                }
                let mut label_raw = String::new();
                let mut closed = false;
                for (col, c) in chars.by_ref() {
                    match c {
                        '}' => {
                            closed = true;
                            break;
                        }
                        '{' | '|' | '\\' => {
                            return Err(syntax(line, col + 1, format!("unexpected {c:?} in label")))
                        }
                        c => label_raw.push(c),
                    }
                }
                if !closed {
                    return Err(syntax(line, open_col, "unbalanced '{'"));
                }
                if surface.is_empty() {
                    return Err(syntax(line, open_col, "empty annotation surface"));
                }
                let label = taxonomy
                    .normalize(label_raw.trim())
                    .map_err(|source| CorpusError::Label { line, source })?;
                let len = surface.chars().count();
                text.push_str(&surface);
                text_len += len;
                spans.push(EntitySpan {
                    start,
                    end: start + len,
                    label,
                    surface,
                });
            }
            c => {
                text.push(c);
                text_len += 1;
            }
        }
    }
    Document::new(doc_id, source, text, spans).map_err(|source| CorpusError::Annotation { line, source })
}

/// Parses a single markup string into a document.
pub fn parse_inline(markup: &str, taxonomy: &Taxonomy) -> Result<Document, CorpusError> {
    parse_markup("doc", "", markup, taxonomy, 1)
}

fn escape_into(out: &mut String, s: &str, in_surface: bool) {
    for c in s.chars() {
        match c {
            '{' | '}' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '|' if in_surface => out.push_str("\\|"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
}

/// Inverse of [`parse_inline`]; labels are written in canonical form.
pub fn emit_inline(doc: &Document) -> String {
    let chars: Vec<char> = doc.text().chars().collect();
    let mut out = String::with_capacity(doc.text().len() + doc.spans().len() * 16);
    let mut pos = 0;
    for span in doc.spans() {
        let plain: String = chars[pos..span.start].iter().collect();
        escape_into(&mut out, &plain, false);
        out.push('{');
        escape_into(&mut out, &span.surface, true);
        out.push('|');
        out.push_str(span.label.canonical_name());
        out.push('}');
        pos = span.end;
    }
    let tail: String = chars[pos..].iter().collect();
    escape_into(&mut out, &tail, false);
    if out.starts_with('@') {
        out.insert(0, '\\');
    }
    out
}

pub fn parse_inline_corpus(name: &str, text: &str, taxonomy: &Taxonomy) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut lines = text.split('\n').enumerate().peekable();
    while let Some((idx, line)) = lines.next() {
        let line_no = idx + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let header = line
            .strip_prefix(HEADER)
            .ok_or_else(|| syntax(line_no, 1, "expected '@@ <doc_id>\\t<source>' header"))?;
        let (doc_id, source) = header.split_once('\t').unwrap_or((header, ""));
        let (markup_line, markup) = match lines.next() {
            Some((i, l)) => (i + 1, l.strip_suffix('\r').unwrap_or(l)),
            None => (line_no + 1, ""),
        };
        documents.push(parse_markup(doc_id.trim(), source, markup, taxonomy, markup_line)?);
    }
    Corpus::new(name, documents)
}

pub fn emit_inline_corpus(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (i, doc) in corpus.documents().iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(HEADER);
        out.push_str(doc.doc_id());
        out.push('\t');
        out.push_str(doc.source());
        out.push('\n');
        out.push_str(&emit_inline(doc));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::taxonomy::{builtin_taxonomy, Label};
    use proptest::prelude::*;

    #[test]
    fn paragraph_17_excerpt() {
        let doc = parse_inline(
            "{Kering|ListedGroup} announced the creation of {Kering Beauté|PrivateCompany}",
            builtin_taxonomy(),
        )
        .unwrap();
        assert_eq!(doc.text(), "Kering announced the creation of Kering Beauté");
        let offsets: Vec<_> = doc.spans().iter().map(|s| s.key()).collect();
        // character count oracle: position of each surface in the plain text
        let chars: Vec<char> = doc.text().chars().collect();
        let find = |needle: &str, from: usize| {
            let n: Vec<char> = needle.chars().collect();
            (from..chars.len()).find(|&i| chars[i..].starts_with(&n)).unwrap()
        };
        let second = find("Kering Beauté", 1);
        assert_eq!(second, 33);
        assert_eq!(
            offsets,
            vec![(0, 6, Label::ListedGroup), (33, 46, Label::PrivateCompany)]
        );
        assert_eq!(parse_inline(&emit_inline(&doc), builtin_taxonomy()).unwrap().spans(), doc.spans());
    }

    #[test]
    fn plain_text_and_empty() {
        let doc = parse_inline("no entities here", builtin_taxonomy()).unwrap();
        assert_eq!(doc.text(), "no entities here");
        assert!(doc.spans().is_empty());
        assert_eq!(emit_inline(&doc), "no entities here");
    }

    #[test]
    fn errors() {
        let t = builtin_taxonomy();
        assert!(matches!(parse_inline("{x|Brandz}", t), Err(CorpusError::Label { .. })));
        assert!(matches!(parse_inline("{|House}", t), Err(CorpusError::Syntax { .. })));
        assert!(matches!(parse_inline("{Gucci|House", t), Err(CorpusError::Syntax { .. })));
        assert!(matches!(parse_inline("{Gucci", t), Err(CorpusError::Syntax { .. })));
        assert!(matches!(parse_inline("a } b", t), Err(CorpusError::Syntax { .. })));
        assert!(matches!(parse_inline("{a{b|House}", t), Err(CorpusError::Syntax { .. })));
        assert!(matches!(parse_inline("bad \\q escape", t), Err(CorpusError::Syntax { .. })));
        match parse_inline("ok } here", t) {
            Err(CorpusError::Syntax { column, .. }) => assert_eq!(column, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn braces_escape_and_reparse() {
        let doc = Document::from_offsets(
            "d",
            "",
            "set {a} | {Gu|cci}\nnext",
            &[(10, 18, Label::House)],
        )
        .unwrap();
        let markup = emit_inline(&doc);
        assert_eq!(markup, "set \\{a\\} | {\\{Gu\\|cci\\}|House}\\nnext");
        let back = parse_inline(&markup, builtin_taxonomy()).unwrap();
        assert_eq!(back.text(), doc.text());
        assert_eq!(back.spans(), doc.spans());
    }

    #[test]
    fn corpus_blocks() {
        let text = "@@ a\tsrc one\n{Gucci|HOUSE} x\n\n@@ b\t\n\n@@ c\tz\n\\@@ not a header\n";
        let corpus = parse_inline_corpus("t", text, builtin_taxonomy()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.documents()[0].source(), "src one");
        assert_eq!(corpus.documents()[1].text(), "");
        assert_eq!(corpus.documents()[2].text(), "@@ not a header");
        let emitted = emit_inline_corpus(&corpus);
        assert_eq!(parse_inline_corpus("t", &emitted, builtin_taxonomy()).unwrap(), corpus);
        assert!(parse_inline_corpus("t", "@@ a\tx\nfoo\n@@ a\ty\nbar\n", builtin_taxonomy()).is_err());
        assert!(matches!(
            parse_inline_corpus("t", "no header\n", builtin_taxonomy()),
            Err(CorpusError::Syntax { line: 1, .. })
        ));
    }

    fn arb_doc() -> impl Strategy<Value = Document> {
        let piece = prop_oneof![
            "[a-z ]{0,5}",
            Just("{".to_string()),
            Just("}".to_string()),
            Just("|".to_string()),
            Just("\\".to_string()),
            Just("@".to_string()),
            Just("é\n".to_string()),
        ];
        (proptest::collection::vec((piece.clone(), proptest::option::of((piece, 1usize..38))), 0..6))
            .prop_filter_map("non-empty surfaces", |parts| {
                let mut text = String::new();
                let mut spans = Vec::new();
                for (plain, ann) in parts {
                    text.push_str(&plain);
                    if let Some((surface, l)) = ann {
                        if surface.is_empty() {
                            return None;
                        }
                        let start = text.chars().count();
                        text.push_str(&surface);
                        spans.push((start, text.chars().count(), Label::ALL[l]));
                    }
                }
                Document::from_offsets("doc", "", text, &spans).ok()
            })
    }

    proptest! {
        #[test]
        fn inline_round_trip(doc in arb_doc()) {
            let back = parse_inline(&emit_inline(&doc), builtin_taxonomy()).unwrap();
            prop_assert_eq!(back.text(), doc.text());
            prop_assert_eq!(back.spans(), doc.spans());
        }
    }
}

//! Tolerant reading of model answers in the `[{'Entity Name': 'Entity Label'}]`
//! format and its common variations.

use serde::{Deserialize, Serialize};

use crate::taxonomy::{alias_key, Label, Taxonomy};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawPrediction {
    pub entity_name: String,
    pub raw_label: String,
    /// `None` when the label is not in the taxonomy.
    pub label: Option<Label>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repair {
    CodeFence,
    SurroundingProse,
    SingleQuotes,
    TrailingComma,
    PythonLiteral,
    TwoFieldObjects,
    MultiPairObject,
    LabelGroups,
    BareObject,
    Truncated,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostics {
    pub repairs: Vec<Repair>,
    /// List items that were not name/label pairs.
    pub skipped_items: usize,
    pub out_of_taxonomy: usize,
}

impl ParseDiagnostics {
    fn note(&mut self, r: Repair) {
        if !self.repairs.contains(&r) {
            self.repairs.push(r);
            self.repairs.sort();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparseable response: {excerpt:?}")]
pub struct Unparseable {
    pub excerpt: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedResponse {
    pub predictions: Vec<RawPrediction>,
    pub diagnostics: ParseDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Str(String),
    Scalar,
    Array(Vec<Value>),
    Object(Vec<(String, Value)>),
}

struct Reader<'a> {
    chars: &'a [char],
    pos: usize,
    diag: &'a mut ParseDiagnostics,
}

impl Reader<'_> {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn value(&mut self) -> Option<Value> {
        self.skip_ws();
        match self.peek()? {
            '[' => self.array(),
            '{' => self.object(),
            '"' | '\'' => self.string().map(Value::Str),
            _ => self.scalar(),
        }
    }

    fn scalar(&mut self) -> Option<Value> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_alphanumeric() || matches!(c, '.' | '-' | '+')) {
            self.pos += 1;
        }
        let word: String = self.chars[start..self.pos].iter().collect();
        match word.as_str() {
            "null" | "true" | "false" => Some(Value::Scalar),
            "None" | "True" | "False" => {
                self.diag.note(Repair::PythonLiteral);
                Some(Value::Scalar)
            }
            w if !w.is_empty() && w.parse::<f64>().is_ok() => Some(Value::Scalar),
            _ => None,
        }
    }

    /// A single-quoted string ends at a quote followed by structure, so
    /// apostrophes inside names (`L'Oréal`) survive.
    fn string(&mut self) -> Option<String> {
        let quote = self.peek()?;
        if quote == '\'' {
            self.diag.note(Repair::SingleQuotes);
        }
        self.pos += 1;
        let mut out = String::new();
        loop {
            let c = self.peek()?;
            self.pos += 1;
            match c {
                '\\' => {
                    let e = self.peek()?;
                    self.pos += 1;
                    match e {
                        'n' => out.push('\n'),
                        't' => out.push('\t'),
                        'r' => out.push('\r'),
                        'u' => {
                            let hex: String = self.chars.get(self.pos..self.pos + 4)?.iter().collect();
                            self.pos += 4;
                            let code = u32::from_str_radix(&hex, 16).ok()?;
                            out.push(char::from_u32(code).unwrap_or('\u{fffd}'));
                        }
                        other => out.push(other),
                    }
                }
                c if c == quote => {
                    if quote == '"' {
                        return Some(out);
                    }
                    let mut look = self.pos;
                    while self.chars.get(look).is_some_and(|c| c.is_whitespace()) {
                        look += 1;
                    }
                    match self.chars.get(look) {
                        None | Some(':' | ',' | '}' | ']') => return Some(out),
                        Some(_) => out.push(c),
                    }
                }
                c => out.push(c),
            }
        }
    }

    /// An array cut off by the end of input keeps its complete items, if it
    /// has any.
    fn array(&mut self) -> Option<Value> {
        self.pos += 1;
        let mut items = Vec::new();
        let truncated = |r: &mut Self, items: Vec<Value>| {
            (r.pos >= r.chars.len() && !items.is_empty()).then(|| {
                r.diag.note(Repair::Truncated);
                Value::Array(items)
            })
        };
        loop {
            self.skip_ws();
            match self.peek() {
                None => return truncated(self, items),
                Some(']') => {
                    self.pos += 1;
                    return Some(Value::Array(items));
                }
                Some(_) => match self.value() {
                    Some(v) => items.push(v),
                    None => return truncated(self, items),
                },
            }
            self.skip_ws();
            let Some(next) = self.peek() else {
                return truncated(self, items);
            };
            match next {
                ',' => {
                    self.pos += 1;
                    self.skip_ws();
                    if self.peek() == Some(']') {
                        self.diag.note(Repair::TrailingComma);
                    }
                }
                ']' => {}
                _ => return None,
            }
        }
    }

    fn object(&mut self) -> Option<Value> {
        self.pos += 1;
        let mut fields = Vec::new();
        loop {
            self.skip_ws();
            match self.peek()? {
                '}' => {
                    self.pos += 1;
                    return Some(Value::Object(fields));
                }
                '"' | '\'' => {
                    let key = self.string()?;
                    self.skip_ws();
                    if self.peek()? != ':' {
                        return None;
                    }
                    self.pos += 1;
                    fields.push((key, self.value()?));
                }
                _ => return None,
            }
            self.skip_ws();
            match self.peek()? {
                ',' => {
                    self.pos += 1;
                    self.skip_ws();
                    if self.peek() == Some('}') {
                        self.diag.note(Repair::TrailingComma);
                    }
                }
                '}' => {}
                _ => return None,
            }
        }
    }
}

/// Body of the first fenced block, if any.
fn strip_fence(raw: &str) -> Option<&str> {
    let open = raw.find("```")?;
    let after = &raw[open + 3..];
    let body_start = after.find('\n').map_or(after.len(), |i| i + 1);
    let body = &after[body_start..];
    let close = body.find("```").unwrap_or(body.len());
    Some(&body[..close])
}

const NAME_KEYS: [&str; 5] = ["entityname", "entity", "name", "text", "mention"];
const LABEL_KEYS: [&str; 5] = ["entitylabel", "label", "type", "entitytype", "category"];

fn two_field(fields: &[(String, Value)]) -> Option<(String, String)> {
    let find = |keys: &[&str]| {
        fields.iter().find_map(|(k, v)| match v {
            Value::Str(s) if keys.contains(&alias_key(k).as_str()) => Some(s.clone()),
            _ => None,
        })
    };
    Some((find(&NAME_KEYS)?, find(&LABEL_KEYS)?))
}

fn pairs_from_object(
    fields: &[(String, Value)],
    taxonomy: &Taxonomy,
    diag: &mut ParseDiagnostics,
) -> Option<Vec<(String, String)>> {
    if fields.len() >= 2 {
        if let Some(pair) = two_field(fields) {
            diag.note(Repair::TwoFieldObjects);
            return Some(vec![pair]);
        }
    }
    let grouped = !fields.is_empty()
        && fields
            .iter()
            .all(|(k, v)| matches!(v, Value::Array(_)) && taxonomy.normalize(k).is_ok());
    if grouped {
        diag.note(Repair::LabelGroups);
        let mut out = Vec::new();
        for (k, v) in fields {
            if let Value::Array(items) = v {
                for item in items {
                    match item {
                        Value::Str(s) => out.push((s.clone(), k.clone())),
                        _ => diag.skipped_items += 1,
                    }
                }
            }
        }
        return Some(out);
    }
    let mut out = Vec::new();
    for (k, v) in fields {
        match v {
            Value::Str(s) => out.push((k.clone(), s.clone())),
            _ => diag.skipped_items += 1,
        }
    }
    if out.len() > 1 {
        diag.note(Repair::MultiPairObject);
    }
    (!out.is_empty()).then_some(out)
}

fn interpret(value: &Value, taxonomy: &Taxonomy, diag: &mut ParseDiagnostics) -> Option<Vec<(String, String)>> {
    match value {
        Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                match item {
                    Value::Object(fields) => match pairs_from_object(fields, taxonomy, diag) {
                        Some(p) => out.extend(p),
                        None => diag.skipped_items += 1,
                    },
                    Value::Array(pair) => match pair.as_slice() {
                        [Value::Str(n), Value::Str(l)] => out.push((n.clone(), l.clone())),
                        _ => diag.skipped_items += 1,
                    },
                    _ => diag.skipped_items += 1,
                }
            }
            // a non-empty list with nothing usable is not an answer
            (items.is_empty() || !out.is_empty()).then_some(out)
        }
        Value::Object(fields) => {
            // {"entities": [...]} style wrapper
            if let [(key, inner @ Value::Array(_))] = fields.as_slice() {
                if taxonomy.normalize(key).is_err() {
                    diag.note(Repair::BareObject);
                    return interpret(inner, taxonomy, diag);
                }
            }
            let pairs = pairs_from_object(fields, taxonomy, diag)?;
            diag.note(Repair::BareObject);
            Some(pairs)
        }
        _ => None,
    }
}

fn excerpt(raw: &str) -> String {
    let trimmed = raw.trim();
    let mut out: String = trimmed.chars().take(80).collect();
    if trimmed.chars().count() > 80 {
        out.push('…');
    }
    out
}

/// Extracts the first usable list of name/label pairs. Fences and prose
/// around it are ignored; the repairs that were needed are reported.
pub fn parse_response(raw: &str, taxonomy: &Taxonomy) -> Result<ParsedResponse, Unparseable> {
    let mut diag = ParseDiagnostics::default();
    let body = match strip_fence(raw) {
        Some(b) => {
            diag.note(Repair::CodeFence);
            b
        }
        None => raw,
    };
    let chars: Vec<char> = body.chars().collect();
    for start in 0..chars.len() {
        if !matches!(chars[start], '[' | '{') {
            continue;
        }
        let mut attempt = diag.clone();
        let mut reader = Reader {
            chars: &chars,
            pos: start,
            diag: &mut attempt,
        };
        let Some(value) = reader.value() else { continue };
        let end = reader.pos;
        let Some(pairs) = interpret(&value, taxonomy, &mut attempt) else { continue };
        let outside: String = chars[..start].iter().chain(&chars[end..]).collect();
        if !outside.trim().is_empty() {
            attempt.note(Repair::SurroundingProse);
        }
        let mut predictions = Vec::new();
        for (name, raw_label) in pairs {
            let entity_name = name.trim().to_string();
            if entity_name.is_empty() {
                attempt.skipped_items += 1;
                continue;
            }
            let label = taxonomy.normalize(raw_label.trim()).ok().filter(|l| !l.is_outside());
            if label.is_none() {
                attempt.out_of_taxonomy += 1;
            }
            predictions.push(RawPrediction {
                entity_name,
                raw_label,
                label,
            });
        }
        return Ok(ParsedResponse {
            predictions,
            diagnostics: attempt,
        });
    }
    Err(Unparseable { excerpt: excerpt(raw) })
}

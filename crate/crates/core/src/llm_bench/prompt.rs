use serde::{Deserialize, Serialize};

use crate::annotation::Document;
use crate::fixtures::fewshot_corpus;
use crate::taxonomy::{builtin_taxonomy, Taxonomy};

pub const INSTRUCTION: &str = "Please recognize all the named entities in the given text. Based only on the given entity label set, provide answer in the following JSON format: [{'Entity Name': 'Entity Label'}]. If there is no entity in the text, return the following empty list: [].";

pub const FEWSHOT_CONNECTOR: &str = "Please found below four example:";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    FewShot,
}

impl PromptMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PromptMode::ZeroShot => "zero-shot",
            PromptMode::FewShot => "few-shot",
        }
    }
}

impl std::str::FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "zero-shot" | "zero_shot" => Ok(PromptMode::ZeroShot),
            "few" | "few-shot" | "few_shot" => Ok(PromptMode::FewShot),
            other => Err(format!("unknown prompt mode {other:?} (expected zero or few)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptSpec {
    mode: PromptMode,
    label_list: Vec<String>,
    instruction: String,
    connector: String,
    examples: Vec<Document>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PromptError {
    #[error("few-shot prompts need at least one example")]
    NoExamples,
    #[error("label list must be non-empty and must not contain the outside label")]
    BadLabelList,
}

impl PromptSpec {
    pub fn new(
        mode: PromptMode,
        label_list: Vec<String>,
        instruction: impl Into<String>,
        connector: impl Into<String>,
        examples: Vec<Document>,
    ) -> Result<PromptSpec, PromptError> {
        if label_list.is_empty() || label_list.iter().any(|l| l == "O" || l == "Outside") {
            return Err(PromptError::BadLabelList);
        }
        if mode == PromptMode::FewShot && examples.is_empty() {
            return Err(PromptError::NoExamples);
        }
        Ok(PromptSpec {
            mode,
            label_list,
            instruction: instruction.into(),
            connector: connector.into(),
            examples,
        })
    }

    /// The benchmark templates: taxonomy label order, the fixed instruction
    /// and, in few-shot mode, the four bundled examples.
    pub fn standard(mode: PromptMode, taxonomy: &Taxonomy) -> PromptSpec {
        let examples = match mode {
            PromptMode::ZeroShot => Vec::new(),
            PromptMode::FewShot => fewshot_corpus().into_documents(),
        };
        let labels = taxonomy.prompt_display_names().into_iter().map(String::from).collect();
        PromptSpec::new(mode, labels, INSTRUCTION, FEWSHOT_CONNECTOR, examples).expect("standard spec is valid")
    }

    pub fn zero_shot() -> PromptSpec {
        PromptSpec::standard(PromptMode::ZeroShot, builtin_taxonomy())
    }

    pub fn few_shot() -> PromptSpec {
        PromptSpec::standard(PromptMode::FewShot, builtin_taxonomy())
    }

    pub fn mode(&self) -> PromptMode {
        self.mode
    }

    pub fn label_list(&self) -> &[String] {
        &self.label_list
    }

    pub fn examples(&self) -> &[Document] {
        &self.examples
    }
}

/// Writes an annotated example the way the few-shot block shows it: each
/// entity followed by its upper-case tag. Punctuation glued to the end of an
/// entity stays before the tag (`Milan. LOCATION`).
pub fn render_example(doc: &Document) -> String {
    let chars: Vec<char> = doc.text().chars().collect();
    let spans = doc.spans();
    let mut out = String::new();
    let mut pos = 0;
    for (i, span) in spans.iter().enumerate() {
        out.extend(&chars[pos..span.end]);
        let limit = spans.get(i + 1).map_or(chars.len(), |next| next.start);
        let mut end = span.end;
        while end < limit && !chars[end].is_whitespace() {
            end += 1;
        }
        out.extend(&chars[span.end..end]);
        out.push(' ');
        out.push_str(&span.label.canonical_name().to_uppercase());
        pos = end;
    }
    out.extend(&chars[pos..]);
    out
}

/// Label list, instruction, optional examples, then the passage; blocks are
/// separated by blank lines.
pub fn build_prompt(spec: &PromptSpec, passage: &str) -> String {
    let quoted: Vec<String> = spec.label_list.iter().map(|l| format!("'{l}'")).collect();
    let mut out = format!("Given entity label set: [{}].\n\n{}\n\n", quoted.join(", "), spec.instruction);
    if spec.mode == PromptMode::FewShot {
        out.push_str(&spec.connector);
        out.push_str("\n\n");
        for ex in &spec.examples {
            out.push_str(&render_example(ex));
            out.push_str("\n\n");
        }
    }
    out.push_str(passage);
    out
}

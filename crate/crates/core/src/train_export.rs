//! Training-side data: class weights for an imbalance-aware loss and a list
//! of tokens worth adding to a model vocabulary.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};
use unicode_normalization::UnicodeNormalization;
use unicode_script::{Script, UnicodeScript};

use crate::annotation::{tokenize, BioTag};
use crate::corpus_io::{Corpus, LabelHistogram};
use crate::taxonomy::Label;

/// Fine-tuning settings the exported weights were meant for, written into
/// the export header for downstream tools.
pub const FINE_TUNING_REFERENCE: &[(&str, &str)] = &[
    ("epochs", "10"),
    ("learning_rate", "5e-5"),
    ("train_batch_size", "32"),
    ("eval_batch_size", "32"),
    ("optimizer", "Adam(betas=(0.9, 0.999), eps=1e-08)"),
    ("scheduler", "linear"),
    ("added_tokens", "300"),
];

pub const DEFAULT_VOCAB_LIMIT: usize = 300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightScheme {
    /// `T / n_c`
    InverseFrequency,
    /// `T / (K n_c)`, frequency-weighted mean 1
    BalancedMean,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightEncoding {
    /// `O` plus one class per entity label (B- and I- tokens pooled).
    PerLabel,
    /// `O`, `B-X` and `I-X` as separate classes.
    PerBioTag,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightScheme::InverseFrequency => "inverse_frequency",
            WeightScheme::BalancedMean => "balanced_mean",
            WeightScheme::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "inverse_frequency" => Ok(WeightScheme::InverseFrequency),
            "balanced_mean" | "balanced" => Ok(WeightScheme::BalancedMean),
            "uniform" => Ok(WeightScheme::Uniform),
            other => Err(format!("unknown weight scheme {other:?}")),
        }
    }
}

impl WeightEncoding {
    pub fn as_str(self) -> &'static str {
        match self {
            WeightEncoding::PerLabel => "per_label",
            WeightEncoding::PerBioTag => "per_bio_tag",
        }
    }
}

impl std::str::FromStr for WeightEncoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('-', "_").as_str() {
            "per_label" | "label" => Ok(WeightEncoding::PerLabel),
            "per_bio_tag" | "per_tag" | "tag" | "bio" => Ok(WeightEncoding::PerBioTag),
            other => Err(format!("unknown weight encoding {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("histogram has no token tags")]
    EmptyHistogram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeight {
    pub class: String,
    pub weight: f64,
    pub count: usize,
    /// The class never occurs; it carries the largest observed weight.
    pub zero_count: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub scheme: WeightScheme,
    pub encoding: WeightEncoding,
    pub normalization: String,
    pub weights: Vec<ClassWeight>,
}

impl ClassWeights {
    pub fn get(&self, class: &str) -> Option<&ClassWeight> {
        self.weights.iter().find(|w| w.class == class)
    }

    /// `sum(n_c w_c) / sum(n_c)`
    pub fn frequency_weighted_mean(&self) -> f64 {
        let total: usize = self.weights.iter().map(|w| w.count).sum();
        self.weights.iter().map(|w| w.weight * w.count as f64).sum::<f64>() / total as f64
    }

    /// Tab-separated `class weight count scheme`, after a `#` header with
    /// the scheme and the reference fine-tuning settings.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# scheme = {}", self.scheme.as_str()).unwrap();
        writeln!(out, "# encoding = {}", self.encoding.as_str()).unwrap();
        writeln!(out, "# normalization = {}", self.normalization).unwrap();
        for (k, v) in FINE_TUNING_REFERENCE {
            writeln!(out, "# {k} = {v}").unwrap();
        }
        out.push_str("class\tweight\tcount\tscheme\n");
        for w in &self.weights {
            writeln!(out, "{}\t{}\t{}\t{}", w.class, w.weight, w.count, self.scheme.as_str()).unwrap();
        }
        out
    }
}

fn class_counts(hist: &LabelHistogram, encoding: WeightEncoding) -> Vec<(String, usize)> {
    let tag = |t: BioTag| hist.tags.get(&t).copied().unwrap_or(0);
    match encoding {
        WeightEncoding::PerBioTag => {
            let mut out = vec![("O".to_string(), tag(BioTag::O))];
            for l in Label::entities() {
                out.push((BioTag::B(l).to_string(), tag(BioTag::B(l))));
                out.push((BioTag::I(l).to_string(), tag(BioTag::I(l))));
            }
            out
        }
        WeightEncoding::PerLabel => {
            let mut out = vec![(Label::Outside.canonical_name().to_string(), tag(BioTag::O))];
            for l in Label::entities() {
                out.push((l.canonical_name().to_string(), tag(BioTag::B(l)) + tag(BioTag::I(l))));
            }
            out
        }
    }
}

/// Weights from token tag counts. Classes that never occur get the largest
/// weight among observed classes and are flagged.
pub fn class_weights(
    hist: &LabelHistogram,
    scheme: WeightScheme,
    encoding: WeightEncoding,
) -> Result<ClassWeights, ExportError> {
    let counts = class_counts(hist, encoding);
    let total: usize = counts.iter().map(|(_, n)| n).sum();
    if total == 0 {
        return Err(ExportError::EmptyHistogram);
    }
    let t = total as f64;
    let k = counts.iter().filter(|(_, n)| *n > 0).count() as f64;
    let raw: Vec<Option<f64>> = counts
        .iter()
        .map(|&(_, n)| {
            (n > 0).then(|| match scheme {
                WeightScheme::InverseFrequency => t / n as f64,
                WeightScheme::BalancedMean => t / (k * n as f64),
                WeightScheme::Uniform => 1.0,
            })
        })
        .collect();
    let scale = match scheme {
        WeightScheme::BalancedMean => {
            let mean = counts
                .iter()
                .zip(&raw)
                .map(|((_, n), w)| w.unwrap_or(0.0) * *n as f64)
                .sum::<f64>()
                / t;
            1.0 / mean
        }
        _ => 1.0,
    };
    let max = raw.iter().flatten().fold(0.0f64, |a, &b| a.max(b)) * scale;
    let weights = counts
        .into_iter()
        .zip(raw)
        .map(|((class, count), w)| ClassWeight {
            class,
            weight: w.map_or(max, |w| w * scale),
            count,
            zero_count: count == 0,
        })
        .collect();
    let normalization = match scheme {
        WeightScheme::InverseFrequency => "w = T / n (T = total tags, n = class count)",
        WeightScheme::BalancedMean => "w = T / (K n), K = classes with n > 0; frequency-weighted mean 1",
        WeightScheme::Uniform => "w = 1",
    };
    Ok(ClassWeights {
        scheme,
        encoding,
        normalization: normalization.into(),
        weights,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabCandidate {
    pub token: String,
    pub frequency: usize,
    pub in_entity: bool,
    pub has_diacritic: bool,
    pub scripts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabExtension {
    pub limit: usize,
    /// Tokens absent from the base vocabulary, before truncation.
    pub candidates_considered: usize,
    pub tokens: Vec<VocabCandidate>,
}

impl VocabExtension {
    pub fn token_list(&self) -> Vec<&str> {
        self.tokens.iter().map(|c| c.token.as_str()).collect()
    }

    /// One token per line.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for c in &self.tokens {
            out.push_str(&c.token);
            out.push('\n');
        }
        out
    }
}

/// True when the canonical decomposition carries a combining mark.
pub fn has_diacritic(token: &str) -> bool {
    token
        .nfd()
        .any(|c| matches!(get_general_category(c), GeneralCategory::NonspacingMark | GeneralCategory::SpacingMark))
}

fn scripts_of(token: &str) -> Vec<String> {
    let set: BTreeSet<String> = token
        .chars()
        .map(|c| c.script())
        .filter(|s| !matches!(s, Script::Common | Script::Inherited))
        .map(|s| s.full_name().to_string())
        .collect();
    if set.is_empty() {
        vec![Script::Common.full_name().to_string()]
    } else {
        set.into_iter().collect()
    }
}

/// Base vocabulary from a one-word-per-line list; blank lines are ignored.
pub fn parse_base_vocab(text: &str) -> HashSet<String> {
    text.lines()
        .map(|l| l.trim_end_matches('\r'))
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect()
}

/// Corpus tokens missing from `base_vocab`, ranked: tokens seen inside a gold
/// entity first, then by frequency, then tokens with diacritics, then by
/// code point order.
pub fn vocab_candidates(corpus: &Corpus, base_vocab: &HashSet<String>, limit: usize) -> VocabExtension {
    let mut stats: HashMap<String, (usize, bool)> = HashMap::new();
    for doc in corpus.documents() {
        let spans = doc.spans();
        for tok in tokenize(doc.text()) {
            if base_vocab.contains(&tok.text) {
                continue;
            }
            let inside = spans.iter().any(|s| s.start <= tok.start && tok.end <= s.end);
            let entry = stats.entry(tok.text).or_default();
            entry.0 += 1;
            entry.1 |= inside;
        }
    }
    let candidates_considered = stats.len();
    let mut ranked: Vec<VocabCandidate> = stats
        .into_iter()
        .map(|(token, (frequency, in_entity))| VocabCandidate {
            has_diacritic: has_diacritic(&token),
            scripts: scripts_of(&token),
            token,
            frequency,
            in_entity,
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.in_entity
            .cmp(&a.in_entity)
            .then(b.frequency.cmp(&a.frequency))
            .then(b.has_diacritic.cmp(&a.has_diacritic))
            .then(a.token.cmp(&b.token))
    });
    ranked.truncate(limit);
    VocabExtension {
        limit,
        candidates_considered,
        tokens: ranked,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Document;
    use crate::corpus_io::corpus_stats;

    fn hist(pairs: &[(BioTag, usize)]) -> LabelHistogram {
        let mut h = LabelHistogram::default();
        for &(t, n) in pairs {
            h.tags.insert(t, n);
        }
        h
    }

    #[test]
    fn ninety_ten_balanced_mean() {
        let h = hist(&[(BioTag::O, 90), (BioTag::B(Label::House), 10)]);
        let w = class_weights(&h, WeightScheme::BalancedMean, WeightEncoding::PerBioTag).unwrap();
        let o = w.get("O").unwrap().weight;
        let b = w.get("B-House").unwrap().weight;
        assert!((o - 10.0 / 18.0).abs() < 1e-12);
        assert!((b - 90.0 / 18.0).abs() < 1e-12);
        assert!((b / o - 9.0).abs() < 1e-12);
        assert!((w.frequency_weighted_mean() - 1.0).abs() < 1e-9);
        let zero = w.get("I-House").unwrap();
        assert!(zero.zero_count);
        assert_eq!(zero.weight, b);
    }

    #[test]
    fn inverse_frequency_and_uniform() {
        let h = hist(&[(BioTag::O, 90), (BioTag::B(Label::House), 10)]);
        let w = class_weights(&h, WeightScheme::InverseFrequency, WeightEncoding::PerLabel).unwrap();
        assert_eq!(w.weights.len(), 38);
        assert!((w.get("O").unwrap().weight - 100.0 / 90.0).abs() < 1e-12);
        assert_eq!(w.get("House").unwrap().weight, 10.0);
        let u = class_weights(&h, WeightScheme::Uniform, WeightEncoding::PerBioTag).unwrap();
        assert_eq!(u.weights.len(), 75);
        assert!(u.weights.iter().all(|w| w.weight == 1.0));
    }

    #[test]
    fn empty_histogram() {
        assert_eq!(
            class_weights(&LabelHistogram::default(), WeightScheme::Uniform, WeightEncoding::PerLabel),
            Err(ExportError::EmptyHistogram)
        );
    }

    #[test]
    fn records_layout() {
        let h = hist(&[(BioTag::O, 3), (BioTag::B(Label::Kol), 1)]);
        let text = class_weights(&h, WeightScheme::InverseFrequency, WeightEncoding::PerLabel)
            .unwrap()
            .to_records();
        assert!(text.contains("# train_batch_size = 32\n"));
        assert!(text.contains("\nclass\tweight\tcount\tscheme\nO\t1.3333333333333333\t3\tinverse_frequency\n"));
        assert!(text.contains("\nKOL\t4\t1\tinverse_frequency\n"));
    }

    #[test]
    fn entity_tokens_rank_first() {
        let mut text = String::new();
        let mut spans = Vec::new();
        for _ in 0..12 {
            let start = text.chars().count();
            text.push_str("Hermès ");
            spans.push((start, start + 6, Label::House));
            text.push_str("zzz ");
        }
        let doc = Document::from_offsets("d", "", text, &spans).unwrap();
        let corpus = Corpus::new("c", vec![doc]).unwrap();
        let v = vocab_candidates(&corpus, &HashSet::new(), 300);
        assert_eq!(v.token_list(), ["Hermès", "zzz"]);
        assert!(v.tokens[0].has_diacritic && v.tokens[0].in_entity);
        assert_eq!(v.tokens[0].scripts, ["Latin"]);
        assert!(vocab_candidates(&corpus, &HashSet::new(), 0).tokens.is_empty());
        let base = parse_base_vocab("Hermès\nzzz\n");
        assert!(vocab_candidates(&corpus, &base, 300).tokens.is_empty());
        // equal frequency, neither in an entity: the diacritic wins
        let doc = Document::from_offsets("d", "", "Beaute Beauté", &[]).unwrap();
        let v = vocab_candidates(&Corpus::new("c", vec![doc]).unwrap(), &HashSet::new(), 10);
        assert_eq!(v.token_list(), ["Beauté", "Beaute"]);
        assert_eq!(corpus_stats(&corpus).tokens, 24);
    }

    #[test]
    fn diacritics() {
        assert!(has_diacritic("Hermès"));
        assert!(has_diacritic("Aēsop"));
        assert!(!has_diacritic("Chanel"));
        assert!(!has_diacritic("ß"));
    }
}

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::annotation::{encode_bio, tokenize, BioTag, BoundaryPolicy};
use crate::taxonomy::Label;

use super::Corpus;

/// Mention and token-tag counts. Every entity label and every BIO tag has
/// an entry, zero or not, so histograms of different corpora line up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    pub documents: usize,
    pub tokens: usize,
    pub mentions: BTreeMap<Label, usize>,
    pub tags: BTreeMap<BioTag, usize>,
    /// Spans that had to be widened or were dropped when tagging tokens.
    pub boundary_warnings: usize,
}

impl Default for LabelHistogram {
    fn default() -> Self {
        let mentions = Label::entities().map(|l| (l, 0)).collect();
        let mut tags: BTreeMap<BioTag, usize> = BTreeMap::new();
        tags.insert(BioTag::O, 0);
        for l in Label::entities() {
            tags.insert(BioTag::B(l), 0);
            tags.insert(BioTag::I(l), 0);
        }
        LabelHistogram {
            documents: 0,
            tokens: 0,
            mentions,
            tags,
            boundary_warnings: 0,
        }
    }
}

impl LabelHistogram {
    pub fn total_mentions(&self) -> usize {
        self.mentions.values().sum()
    }

    /// Adds counts from `other` into `self`.
    pub fn merge(&mut self, other: &LabelHistogram) {
        self.documents += other.documents;
        self.tokens += other.tokens;
        self.boundary_warnings += other.boundary_warnings;
        for (l, n) in &other.mentions {
            *self.mentions.entry(*l).or_default() += n;
        }
        for (t, n) in &other.tags {
            *self.tags.entry(*t).or_default() += n;
        }
    }
}

pub fn corpus_stats(corpus: &Corpus) -> LabelHistogram {
    let mut hist = LabelHistogram::default();
    for doc in corpus.documents() {
        hist.documents += 1;
        for span in doc.spans() {
            *hist.mentions.entry(span.label).or_default() += 1;
        }
        let tokens = tokenize(doc.text());
        hist.tokens += tokens.len();
        let encoded = encode_bio(doc, &tokens, BoundaryPolicy::ExpandToToken)
            .expect("expanding encoder accepts every valid document");
        hist.boundary_warnings += encoded.warnings.len();
        for tag in encoded.sequence.tags() {
            *hist.tags.entry(*tag).or_default() += 1;
        }
    }
    hist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::Document;

    #[test]
    fn counts_and_merge() {
        let a = Document::from_offsets("a", "", "Louis Vuitton and Dior", &[(0, 13, Label::House), (18, 22, Label::House)])
            .unwrap();
        let b = Document::from_offsets("b", "", "Rolex", &[(0, 5, Label::Timepiece)]).unwrap();
        let h = corpus_stats(&Corpus::new("c", vec![a.clone(), b.clone()]).unwrap());
        assert_eq!(h.documents, 2);
        assert_eq!(h.tokens, 5);
        assert_eq!(h.mentions[&Label::House], 2);
        assert_eq!(h.mentions[&Label::Timepiece], 1);
        assert_eq!(h.mentions.len(), 37);
        assert_eq!(h.tags.len(), 75);
        assert_eq!(h.tags[&BioTag::B(Label::House)], 2);
        assert_eq!(h.tags[&BioTag::I(Label::House)], 1);
        assert_eq!(h.tags[&BioTag::O], 1);

        let mut merged = corpus_stats(&Corpus::new("a", vec![a]).unwrap());
        merged.merge(&corpus_stats(&Corpus::new("b", vec![b]).unwrap()));
        assert_eq!(merged, h);
        assert_eq!(merged.total_mentions(), 3);
    }

    #[test]
    fn json_shape() {
        let h = LabelHistogram::default();
        let v = serde_json::to_value(&h).unwrap();
        assert_eq!(v["mentions"]["KOL"], 0);
        assert_eq!(v["tags"]["B-ListedGroup"], 0);
        let back: LabelHistogram = serde_json::from_value(v).unwrap();
        assert_eq!(back, h);
    }
}

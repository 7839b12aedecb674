//! Strict mention-level scoring, token accuracy and a diagnostic diff.
//!
//! A prediction is correct only with identical start, end and label.
//! Precision and recall use the 0/0 convention: a ratio with a zero
//! denominator is 0 when the other side has mentions and 1 when neither does.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::{encode_bio, tokenize, BoundaryPolicy, Document, EntitySpan, TaggedSequence};
use crate::corpus_io::Corpus;
use crate::taxonomy::Label;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoreError {
    #[error("document ids differ: missing from predictions {missing:?}, not in gold {extra:?}")]
    DocIdMismatch { missing: Vec<String>, extra: Vec<String> },
    #[error("document {doc_id}: gold and predicted text differ")]
    TextMismatch { doc_id: String },
    #[error("sequence {index}: gold has {gold} tags, prediction has {predicted}")]
    LengthMismatch {
        index: usize,
        gold: usize,
        predicted: usize,
    },
    #[error("gold has {gold} sequences, prediction has {predicted}")]
    SequenceCountMismatch { gold: usize, predicted: usize },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Gold mentions with this label.
    pub support: usize,
}

impl LabelCounts {
    pub fn predicted(&self) -> usize {
        self.tp + self.fp
    }

    fn add(&mut self, other: &LabelCounts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.support += other.support;
    }
}

/// Raw counts. `out_of_taxonomy` holds predictions whose label could not be
/// mapped; they are false positives in the micro pool but belong to no row.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub per_label: BTreeMap<Label, LabelCounts>,
    pub out_of_taxonomy: usize,
}

impl MatchCounts {
    pub fn label(&self, label: Label) -> LabelCounts {
        self.per_label.get(&label).copied().unwrap_or_default()
    }

    /// Pooled counts; out-of-taxonomy predictions count as false positives.
    pub fn total(&self) -> LabelCounts {
        let mut t = LabelCounts::default();
        for c in self.per_label.values() {
            t.add(c);
        }
        t.fp += self.out_of_taxonomy;
        t
    }

    /// A prediction that maps to no span, e.g. an ungrounded model answer.
    pub fn add_false_positive(&mut self, label: Label) {
        self.per_label.entry(label).or_default().fp += 1;
    }

    pub fn add_out_of_taxonomy(&mut self) {
        self.out_of_taxonomy += 1;
    }

    pub fn merge(&mut self, other: &MatchCounts) {
        for (l, c) in &other.per_label {
            self.per_label.entry(*l).or_default().add(c);
        }
        self.out_of_taxonomy += other.out_of_taxonomy;
    }
}

/// Strict matching within one document. Texts must be equal.
pub fn count_document(gold: &Document, predicted: &Document) -> Result<MatchCounts, ScoreError> {
    if gold.text() != predicted.text() {
        return Err(ScoreError::TextMismatch {
            doc_id: gold.doc_id().to_string(),
        });
    }
    Ok(count_spans(gold.spans(), predicted.spans()))
}

pub(crate) fn count_spans(gold: &[EntitySpan], predicted: &[EntitySpan]) -> MatchCounts {
    let mut counts = MatchCounts::default();
    let mut unmatched: HashMap<(usize, usize, Label), usize> = HashMap::new();
    for g in gold {
        *unmatched.entry(g.key()).or_default() += 1;
        counts.per_label.entry(g.label).or_default().support += 1;
    }
    for p in predicted {
        let row = counts.per_label.entry(p.label).or_default();
        match unmatched.get_mut(&p.key()) {
            Some(n) if *n > 0 => {
                *n -= 1;
                row.tp += 1;
            }
            _ => row.fp += 1,
        }
    }
    for ((_, _, label), n) in unmatched {
        counts.per_label.entry(label).or_default().fn_ += n;
    }
    counts
}

fn check_ids(gold: &Corpus, predicted: &Corpus) -> Result<(), ScoreError> {
    let missing: Vec<String> = gold
        .documents()
        .iter()
        .filter(|d| predicted.get(d.doc_id()).is_none())
        .map(|d| d.doc_id().to_string())
        .collect();
    let extra: Vec<String> = predicted
        .documents()
        .iter()
        .filter(|d| gold.get(d.doc_id()).is_none())
        .map(|d| d.doc_id().to_string())
        .collect();
    if missing.is_empty() && extra.is_empty() {
        Ok(())
    } else {
        Err(ScoreError::DocIdMismatch { missing, extra })
    }
}

/// Counts over a whole corpus, documents paired by id.
pub fn count_entities(gold: &Corpus, predicted: &Corpus) -> Result<MatchCounts, ScoreError> {
    check_ids(gold, predicted)?;
    let mut counts = MatchCounts::default();
    for g in gold.documents() {
        let p = predicted.get(g.doc_id()).expect("ids checked");
        counts.merge(&count_document(g, p)?);
    }
    Ok(counts)
}

pub fn ratio(num: usize, den: usize, other_side: usize) -> f64 {
    if den == 0 {
        if other_side == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        num as f64 / den as f64
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Prf {
    pub fn from_counts(c: &LabelCounts) -> Prf {
        let predicted = c.predicted();
        let precision = ratio(c.tp, predicted, c.support);
        let recall = ratio(c.tp, c.support, predicted);
        Prf {
            precision,
            recall,
            f1: f1(precision, recall),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub label: Label,
    #[serde(flatten)]
    pub counts: LabelCounts,
    #[serde(flatten)]
    pub metrics: Prf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub documents: usize,
    pub gold_mentions: usize,
    pub predicted_mentions: usize,
    pub out_of_taxonomy: usize,
    pub micro: Prf,
    /// Unweighted mean over labels present in gold or predictions.
    pub macro_avg: Prf,
    /// Fraction of tokens with identical tags, `None` when there are no tokens.
    pub token_accuracy: Option<f64>,
    /// Rows for labels present in gold or predictions, in taxonomy order.
    pub per_label: Vec<LabelMetrics>,
    pub totals: LabelCounts,
}

impl MetricsReport {
    pub fn from_counts(counts: &MatchCounts, documents: usize, token_accuracy: Option<f64>) -> MetricsReport {
        let per_label: Vec<LabelMetrics> = counts
            .per_label
            .iter()
            .filter(|(_, c)| c.support > 0 || c.predicted() > 0)
            .map(|(l, c)| LabelMetrics {
                label: *l,
                counts: *c,
                metrics: Prf::from_counts(c),
            })
            .collect();
        let totals = counts.total();
        let macro_avg = if per_label.is_empty() {
            Prf::from_counts(&totals)
        } else {
            let n = per_label.len() as f64;
            let mean = |f: fn(&Prf) -> f64| per_label.iter().map(|r| f(&r.metrics)).sum::<f64>() / n;
            Prf {
                precision: mean(|m| m.precision),
                recall: mean(|m| m.recall),
                f1: mean(|m| m.f1),
            }
        };
        MetricsReport {
            documents,
            gold_mentions: totals.support,
            predicted_mentions: totals.predicted(),
            out_of_taxonomy: counts.out_of_taxonomy,
            micro: Prf::from_counts(&totals),
            macro_avg,
            token_accuracy,
            per_label,
            totals,
        }
    }

    pub fn label(&self, label: Label) -> Option<&LabelMetrics> {
        self.per_label.iter().find(|r| r.label == label)
    }
}

/// Entity scores plus token accuracy over the evaluation tokenizer, spans
/// widened to token edges for the tag comparison.
pub fn score_entities(gold: &Corpus, predicted: &Corpus) -> Result<MetricsReport, ScoreError> {
    let counts = count_entities(gold, predicted)?;
    let mut same = 0usize;
    let mut total = 0usize;
    for g in gold.documents() {
        let p = predicted.get(g.doc_id()).expect("ids checked");
        let tokens = tokenize(g.text());
        let gt = encode_bio(g, &tokens, BoundaryPolicy::ExpandToToken).expect("expanding encode");
        let pt = encode_bio(p, &tokens, BoundaryPolicy::ExpandToToken).expect("expanding encode");
        total += tokens.len();
        same += gt
            .sequence
            .tags()
            .iter()
            .zip(pt.sequence.tags())
            .filter(|(a, b)| a == b)
            .count();
    }
    let accuracy = (total > 0).then(|| same as f64 / total as f64);
    Ok(MetricsReport::from_counts(&counts, gold.len(), accuracy))
}

/// Fraction of positions with identical tags, `O` included. Zero positions
/// overall gives 1.0.
pub fn score_tokens(gold: &[TaggedSequence], predicted: &[TaggedSequence]) -> Result<f64, ScoreError> {
    if gold.len() != predicted.len() {
        return Err(ScoreError::SequenceCountMismatch {
            gold: gold.len(),
            predicted: predicted.len(),
        });
    }
    let mut same = 0usize;
    let mut total = 0usize;
    for (index, (g, p)) in gold.iter().zip(predicted).enumerate() {
        if g.len() != p.len() {
            return Err(ScoreError::LengthMismatch {
                index,
                gold: g.len(),
                predicted: p.len(),
            });
        }
        total += g.len();
        same += g.tags().iter().zip(p.tags()).filter(|(a, b)| a == b).count();
    }
    Ok(if total == 0 { 1.0 } else { same as f64 / total as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiffKind {
    TP,
    FP,
    FN,
    LabelError,
    BoundaryError,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub kind: DiffKind,
    pub gold: Option<EntitySpan>,
    pub predicted: Option<EntitySpan>,
}

impl DiffEntry {
    fn position(&self) -> (usize, usize) {
        let g = self.gold.as_ref().map(|s| s.start);
        let p = self.predicted.as_ref().map(|s| s.start);
        let start = match (g, p) {
            (Some(a), Some(b)) => a.min(b),
            (a, b) => a.or(b).unwrap_or(0),
        };
        (start, if self.gold.is_some() { 0 } else { 1 })
    }
}

/// Classifies every gold and predicted span exactly once. Label and boundary
/// errors refine the strict FP/FN counts but do not replace them.
pub fn diff_entities(gold: &Document, predicted: &Document) -> Result<Vec<DiffEntry>, ScoreError> {
    if gold.text() != predicted.text() {
        return Err(ScoreError::TextMismatch {
            doc_id: gold.doc_id().to_string(),
        });
    }
    let g = gold.spans();
    let p = predicted.spans();
    let mut g_used = vec![false; g.len()];
    let mut p_used = vec![false; p.len()];
    let mut out = Vec::new();
    let mut pair = |kind: DiffKind, test: &dyn Fn(&EntitySpan, &EntitySpan) -> bool, g_used: &mut [bool], p_used: &mut [bool]| {
        for (gi, gs) in g.iter().enumerate() {
            if g_used[gi] {
                continue;
            }
            if let Some(pi) = (0..p.len()).find(|&pi| !p_used[pi] && test(gs, &p[pi])) {
                g_used[gi] = true;
                p_used[pi] = true;
                out.push(DiffEntry {
                    kind,
                    gold: Some(gs.clone()),
                    predicted: Some(p[pi].clone()),
                });
            }
        }
    };
    pair(DiffKind::TP, &|a, b| a.key() == b.key(), &mut g_used, &mut p_used);
    pair(
        DiffKind::LabelError,
        &|a, b| (a.start, a.end) == (b.start, b.end) && a.label != b.label,
        &mut g_used,
        &mut p_used,
    );
    pair(
        DiffKind::BoundaryError,
        &|a, b| a.label == b.label && a.overlaps(b),
        &mut g_used,
        &mut p_used,
    );
    for (gi, gs) in g.iter().enumerate() {
        if !g_used[gi] {
            out.push(DiffEntry {
                kind: DiffKind::FN,
                gold: Some(gs.clone()),
                predicted: None,
            });
        }
    }
    for (pi, ps) in p.iter().enumerate() {
        if !p_used[pi] {
            out.push(DiffEntry {
                kind: DiffKind::FP,
                gold: None,
                predicted: Some(ps.clone()),
            });
        }
    }
    out.sort_by_key(DiffEntry::position);
    Ok(out)
}

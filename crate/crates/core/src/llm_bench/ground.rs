//! Mapping predicted entity strings back to character spans.

use serde::{Deserialize, Serialize};

use crate::annotation::{tokenize, EntitySpan};

use super::response::RawPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alignment {
    /// Both ends of an occurrence must fall on token edges.
    #[default]
    RequireAligned,
    /// Occurrences are widened to the enclosing token edges.
    ExpandToToken,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundingPolicy {
    pub case_insensitive: bool,
    pub alignment: Alignment,
}

impl Default for GroundingPolicy {
    fn default() -> Self {
        GroundingPolicy {
            case_insensitive: true,
            alignment: Alignment::RequireAligned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroundingNote {
    Exact,
    CaseInsensitive,
    Ungrounded,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundedPrediction {
    pub origin: RawPrediction,
    pub span: Option<EntitySpan>,
    pub note: GroundingNote,
}

fn same_char(a: char, b: char, fold: bool) -> bool {
    a == b || (fold && a.to_lowercase().eq(b.to_lowercase()))
}

struct Grounder {
    chars: Vec<char>,
    /// Per character: (start, end) of the token containing it.
    token_of: Vec<Option<(usize, usize)>>,
    token_starts: Vec<bool>,
    token_ends: Vec<bool>,
    consumed: Vec<(usize, usize)>,
}

impl Grounder {
    fn new(text: &str) -> Grounder {
        let chars: Vec<char> = text.chars().collect();
        let n = chars.len();
        let mut token_of = vec![None; n];
        let mut token_starts = vec![false; n + 1];
        let mut token_ends = vec![false; n + 1];
        for t in tokenize(text) {
            token_starts[t.start] = true;
            token_ends[t.end] = true;
            for slot in &mut token_of[t.start..t.end] {
                *slot = Some((t.start, t.end));
            }
        }
        Grounder {
            chars,
            token_of,
            token_starts,
            token_ends,
            consumed: Vec::new(),
        }
    }

    fn free(&self, start: usize, end: usize) -> bool {
        self.consumed.iter().all(|&(s, e)| end <= s || e <= start)
    }

    fn place(&self, start: usize, end: usize, alignment: Alignment) -> Option<(usize, usize)> {
        let (s, e) = match alignment {
            Alignment::RequireAligned => {
                if !(self.token_starts[start] && self.token_ends[end]) {
                    return None;
                }
                (start, end)
            }
            Alignment::ExpandToToken => {
                let s = self.token_of[start].map_or(start, |t| t.0);
                let e = self.token_of[end - 1].map_or(end, |t| t.1);
                (s, e)
            }
        };
        self.free(s, e).then_some((s, e))
    }

    fn find(&self, name: &[char], fold: bool, alignment: Alignment) -> Option<(usize, usize)> {
        if name.is_empty() || name.len() > self.chars.len() {
            return None;
        }
        (0..=self.chars.len() - name.len()).find_map(|start| {
            let matches = self.chars[start..start + name.len()]
                .iter()
                .zip(name)
                .all(|(&a, &b)| same_char(a, b, fold));
            if matches {
                self.place(start, start + name.len(), alignment)
            } else {
                None
            }
        })
    }
}

/// Grounds predictions in order: leftmost occurrence not overlapping an
/// earlier grounding, exact match first, then case-insensitive if allowed.
/// Predictions without a taxonomy label are never grounded.
pub fn ground(predictions: &[RawPrediction], text: &str, policy: GroundingPolicy) -> Vec<GroundedPrediction> {
    let mut g = Grounder::new(text);
    predictions
        .iter()
        .map(|p| {
            let ungrounded = GroundedPrediction {
                origin: p.clone(),
                span: None,
                note: GroundingNote::Ungrounded,
            };
            let Some(label) = p.label else { return ungrounded };
            let name: Vec<char> = p.entity_name.chars().collect();
            let hit = g
                .find(&name, false, policy.alignment)
                .map(|r| (r, GroundingNote::Exact))
                .or_else(|| {
                    policy
                        .case_insensitive
                        .then(|| g.find(&name, true, policy.alignment))
                        .flatten()
                        .map(|r| (r, GroundingNote::CaseInsensitive))
                });
            match hit {
                Some(((s, e), note)) => {
                    g.consumed.push((s, e));
                    GroundedPrediction {
                        origin: p.clone(),
                        span: Some(EntitySpan::from_text(text, s, e, label)),
                        note,
                    }
                }
                None => ungrounded,
            }
        })
        .collect()
}

/// Type-level mode: keep the first of each repeated (name, label) pair.
pub fn dedupe_type_level(predictions: &[RawPrediction]) -> Vec<RawPrediction> {
    let mut seen = std::collections::HashSet::new();
    predictions
        .iter()
        .filter(|p| seen.insert((p.entity_name.clone(), p.raw_label.clone())))
        .cloned()
        .collect()
}

//! The bundled 50-paragraph benchmark and the four few-shot examples.

use crate::corpus_io::{parse_inline_corpus, Corpus};
use crate::taxonomy::builtin_taxonomy;

pub const BENCHMARK_INLINE: &str = include_str!("../data/benchmark.inline");
pub const FEWSHOT_INLINE: &str = include_str!("../data/fewshot.inline");

pub fn benchmark_corpus() -> Corpus {
    parse_inline_corpus("benchmark", BENCHMARK_INLINE, builtin_taxonomy()).expect("bundled benchmark parses")
}

pub fn fewshot_corpus() -> Corpus {
    parse_inline_corpus("fewshot", FEWSHOT_INLINE, builtin_taxonomy()).expect("bundled few-shot examples parse")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_data_loads() {
        let b = benchmark_corpus();
        assert_eq!(b.len(), 50);
        assert_eq!(b.documents()[0].doc_id(), "p01");
        assert_eq!(fewshot_corpus().len(), 4);
    }
}

//! Markdown rendering of metrics and label statistics. Numbers use four
//! decimals, ties rounded to even on the exact binary value.

use std::fmt::Write as _;

use crate::annotation::BioTag;
use crate::corpus_io::LabelHistogram;
use crate::scorer::MetricsReport;
use crate::taxonomy::Label;

pub fn fmt4(x: f64) -> String {
    format!("{x:.4}")
}

/// One row per named report: `| Model | Precision | Recall | F1 |`.
pub fn metrics_table(rows: &[(&str, &MetricsReport)]) -> String {
    let mut out = String::from("| Model | Precision | Recall | F1 |\n|---|---:|---:|---:|\n");
    for (name, r) in rows {
        writeln!(
            out,
            "| {} | {} | {} | {} |",
            name,
            fmt4(r.micro.precision),
            fmt4(r.micro.recall),
            fmt4(r.micro.f1)
        )
        .unwrap();
    }
    out
}

/// Headline micro scores, a short summary and per-label rows.
pub fn render_metrics(name: &str, r: &MetricsReport) -> String {
    let mut out = metrics_table(&[(name, r)]);
    out.push('\n');
    writeln!(out, "- documents: {}", r.documents).unwrap();
    writeln!(out, "- gold mentions: {}", r.gold_mentions).unwrap();
    writeln!(out, "- predicted mentions: {}", r.predicted_mentions).unwrap();
    writeln!(
        out,
        "- true positives / false positives / false negatives: {} / {} / {}",
        r.totals.tp, r.totals.fp, r.totals.fn_
    )
    .unwrap();
    if r.out_of_taxonomy > 0 {
        writeln!(out, "- predictions with unknown labels: {}", r.out_of_taxonomy).unwrap();
    }
    writeln!(
        out,
        "- macro average: precision {}, recall {}, F1 {}",
        fmt4(r.macro_avg.precision),
        fmt4(r.macro_avg.recall),
        fmt4(r.macro_avg.f1)
    )
    .unwrap();
    let acc = r.token_accuracy.map_or_else(|| "n/a".to_string(), fmt4);
    writeln!(out, "- token accuracy: {acc}").unwrap();
    if !r.per_label.is_empty() {
        out.push_str("\n| Label | Precision | Recall | F1 | Support | TP | FP | FN |\n|---|---:|---:|---:|---:|---:|---:|---:|\n");
        for row in &r.per_label {
            writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} | {} |",
                row.label.display_name(),
                fmt4(row.metrics.precision),
                fmt4(row.metrics.recall),
                fmt4(row.metrics.f1),
                row.counts.support,
                row.counts.tp,
                row.counts.fp,
                row.counts.fn_
            )
            .unwrap();
        }
    }
    out
}

/// Label distribution: `O` first, then entity labels by mention count
/// (ties by token count, then taxonomy order).
pub fn render_histogram(h: &LabelHistogram) -> String {
    let tag = |t: BioTag| h.tags.get(&t).copied().unwrap_or(0);
    let total_mentions = h.total_mentions();
    let mut rows: Vec<(Label, usize, usize)> = Label::entities()
        .map(|l| (l, h.mentions.get(&l).copied().unwrap_or(0), tag(BioTag::B(l)) + tag(BioTag::I(l))))
        .collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    let mut out = String::new();
    writeln!(out, "- documents: {}", h.documents).unwrap();
    writeln!(out, "- tokens: {}", h.tokens).unwrap();
    writeln!(out, "- mentions: {total_mentions}").unwrap();
    if h.boundary_warnings > 0 {
        writeln!(out, "- spans not aligned to tokens: {}", h.boundary_warnings).unwrap();
    }
    out.push_str("\n| Label | Mentions | Share | Tokens |\n|---|---:|---:|---:|\n");
    writeln!(out, "| O | - | - | {} |", tag(BioTag::O)).unwrap();
    for (l, m, t) in rows {
        let share = if total_mentions == 0 { 0.0 } else { m as f64 / total_mentions as f64 };
        writeln!(out, "| {} | {} | {} | {} |", l.canonical_name(), m, fmt4(share), t).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scorer::{count_spans, MetricsReport};
    use crate::annotation::EntitySpan;

    #[test]
    fn half_even_on_exact_ties() {
        assert_eq!(fmt4(0.03125), "0.0312");
        assert_eq!(fmt4(0.09375), "0.0938");
        assert_eq!(fmt4(1.0 / 3.0), "0.3333");
        assert_eq!(fmt4(0.4), "0.4000");
        assert_eq!(fmt4(1.0), "1.0000");
    }

    #[test]
    fn table_rows() {
        let g = [EntitySpan::from_text("ab cd ef", 0, 2, Label::House), EntitySpan::from_text("ab cd ef", 3, 5, Label::House), EntitySpan::from_text("ab cd ef", 6, 8, Label::Brand)];
        let p = [g[0].clone(), EntitySpan::from_text("ab cd ef", 6, 8, Label::House)];
        let r = MetricsReport::from_counts(&count_spans(&g, &p), 1, None);
        let t = render_metrics("m", &r);
        assert!(t.starts_with("| Model | Precision | Recall | F1 |\n|---|---:|---:|---:|\n| m | 0.5000 | 0.3333 | 0.4000 |\n"));
        assert!(t.contains("| House | 0.5000 | 0.5000 | 0.5000 | 2 | 1 | 1 | 1 |"));
        assert!(t.contains("- token accuracy: n/a"));
    }

    #[test]
    fn empty_histogram_has_all_rows() {
        let t = render_histogram(&LabelHistogram::default());
        assert_eq!(t.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Label")).count(), 38);
        assert!(t.contains("| Location | 0 | 0.0000 | 0 |"));
    }
}

//! Evaluation report rendering: a human-readable text block and a flat TSV.

use std::fmt::Write as _;

use ipvote_core::ensemble::VoteMode;
use ipvote_core::{ClassDistribution, ConfusionMatrix, ScoreSummary};

#[derive(Debug, Clone)]
pub struct Report {
    pub mode: Option<VoteMode>,
    pub corpus: String,
    pub examples: usize,
    pub members: usize,
    pub confusion: ConfusionMatrix,
    /// Mean and stdev of each member's own F1 on the validation corpus.
    pub member_f1: Option<ScoreSummary>,
}

impl Report {
    pub fn render_text(&self) -> String {
        let scores = self.confusion.scores();
        let mut out = String::from("ensemble report\n");
        if let Some(mode) = self.mode {
            writeln!(out, "{:<12}{mode}", "mode").unwrap();
        }
        writeln!(out, "{:<12}{} ({} examples)", "corpus", self.corpus, self.examples).unwrap();
        if self.members > 0 {
            writeln!(out, "{:<12}{}", "members", self.members).unwrap();
        }
        out.push('\n');
        for (name, value) in [
            ("precision", scores.precision),
            ("recall", scores.recall),
            ("f1", scores.f1),
            ("accuracy", scores.accuracy),
        ] {
            writeln!(out, "{name:<12}{value:.3}").unwrap();
        }
        if let Some(summary) = &self.member_f1 {
            writeln!(out, "\nmember F1 on validation (n={})", summary.n).unwrap();
            for line in summary.render_rows("F1").lines() {
                let (k, v) = line.split_once('\t').unwrap_or((line, ""));
                writeln!(out, "{k:<12}{v}").unwrap();
            }
        }
        out.push_str("\nconfusion matrix (rows actual, columns predicted)\n");
        out.push_str(&self.confusion.render_grid());
        out
    }

    pub fn render_tsv(&self) -> String {
        let s = self.confusion.scores();
        let mut out = String::from("key\tvalue\n");
        let mut row = |k: &str, v: String| {
            out.push_str(k);
            out.push('\t');
            out.push_str(&v);
            out.push('\n');
        };
        if let Some(mode) = self.mode {
            row("mode", mode.to_string());
        }
        row("corpus", self.corpus.clone());
        row("examples", self.examples.to_string());
        row("members", self.members.to_string());
        row("precision", s.precision.to_string());
        row("recall", s.recall.to_string());
        row("f1", s.f1.to_string());
        row("accuracy", s.accuracy.to_string());
        row("tp", self.confusion.tp.to_string());
        row("fp", self.confusion.fp.to_string());
        row("fn", self.confusion.fn_.to_string());
        row("tn", self.confusion.tn.to_string());
        if let Some(m) = &self.member_f1 {
            row("member_f1_mean", m.mean.to_string());
            row("member_f1_stdev", m.stdev.to_string());
            row("member_f1_n", m.n.to_string());
        }
        out
    }
}

/// Frequency table with one row per split and an `overall` row when there are several.
pub fn render_stats(rows: &[(String, ClassDistribution)], tsv: bool) -> String {
    let mut all: Vec<(String, ClassDistribution)> = rows.to_vec();
    if rows.len() > 1 {
        let negatives = rows.iter().map(|r| r.1.negatives).sum();
        let positives = rows.iter().map(|r| r.1.positives).sum();
        let overall = ClassDistribution::from_counts(negatives, positives)
            .expect("non-empty splits sum to a non-empty total");
        all.push(("overall".to_owned(), overall));
    }
    let mut out = String::new();
    if tsv {
        out.push_str("split\tnegatives\tpositives\ttotal\tpositive_rate\n");
        for (name, d) in &all {
            writeln!(out, "{name}\t{}\t{}\t{}\t{}", d.negatives, d.positives, d.total, d.positive_rate).unwrap();
        }
        return out;
    }
    let width = all.iter().map(|r| r.0.len()).max().unwrap_or(0).max("split".len());
    writeln!(
        out,
        "{:<width$}  {:>9}  {:>9}  {:>7}  {:>13}",
        "split", "negatives", "positives", "total", "positive_rate"
    )
    .unwrap();
    for (name, d) in &all {
        writeln!(
            out,
            "{name:<width$}  {:>9}  {:>9}  {:>7}  {:>13.4}",
            d.negatives, d.positives, d.total, d.positive_rate
        )
        .unwrap();
    }
    out
}

//! Weighted soft voting and majority voting over member probability tables.
//!
//! The soft ensemble probability for an example is the weight-normalized linear
//! combination of member probabilities,
//!
//! ```text
//! P_e(y=1|x) = sum_i(a_i * P_i(y=1|x)) / sum_i(a_i)
//! ```
//!
//! and the negative-class probability is always `1 - P_e(y=1|x)`. Weights are
//! kept unnormalized (typically each member's validation F1) and only enter
//! through the ratio above.
//!
//! Ties go to the positive class everywhere: a probability of exactly 0.5 and
//! an even split in a majority vote both decide `1`.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use indexmap::IndexMap;

use crate::corpus::{ClassLabel, LabeledCorpus};
use crate::error::{Error, Result};
use crate::metrics::{ConfusionMatrix, Scores};
use crate::tsv;

pub const DECISION_THRESHOLD: f64 = 0.5;

const PROBABILITY_HEADER: [&str; 2] = ["id", "prob_positive"];
const SPEC_HEADER: [&str; 2] = ["member_id", "weight"];
const VERDICT_HEADER: [&str; 3] = ["id", "p_positive", "label"];

/// Slack allowed on probabilities read from external files before clamping.
pub const PROBABILITY_TOLERANCE: f64 = 1e-9;

/// One member's positive-class probabilities keyed by example id, in example order.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    member_id: String,
    entries: IndexMap<String, f64>,
}

impl ProbabilityTable {
    pub fn new<I, S>(member_id: impl Into<String>, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let member_id = member_id.into();
        let mut map = IndexMap::new();
        for (id, p) in entries {
            let id = id.into();
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "member {member_id:?}: probability {p} for id {id:?} is outside [0, 1]"
                )));
            }
            if map.contains_key(&id) {
                return Err(Error::invalid(format!(
                    "member {member_id:?}: duplicate id {id:?}"
                )));
            }
            map.insert(id, p);
        }
        Ok(ProbabilityTable {
            member_id,
            entries: map,
        })
    }

    pub fn member_id(&self) -> &str {
        &self.member_id
    }

    pub fn entries(&self) -> &IndexMap<String, f64> {
        &self.entries
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Thresholded predictions at 0.5, ties positive.
    pub fn hard_predictions(&self) -> IndexMap<String, ClassLabel> {
        self.entries
            .iter()
            .map(|(id, &p)| (id.clone(), threshold(p)))
            .collect()
    }

    /// Fails unless the table holds exactly the ids of `corpus`.
    pub fn check_coverage(&self, corpus: &LabeledCorpus) -> Result<()> {
        let expected: HashSet<&str> = corpus.ids().collect();
        let missing: Vec<&str> = corpus
            .ids()
            .filter(|id| !self.entries.contains_key(*id))
            .collect();
        let extra: Vec<&str> = self
            .entries
            .keys()
            .map(String::as_str)
            .filter(|id| !expected.contains(id))
            .collect();
        if missing.is_empty() && extra.is_empty() {
            return Ok(());
        }
        Err(Error::invalid(format!(
            "member {:?} does not cover corpus {:?}: {} missing ids {:?}, {} extra ids {:?}",
            self.member_id,
            corpus.split_name(),
            missing.len(),
            preview(&missing),
            extra.len(),
            preview(&extra),
        )))
    }

    /// Serializes as probability TSV (`id<TAB>prob_positive`).
    ///
    /// Values use the shortest decimal that round-trips exactly.
    pub fn to_tsv(&self) -> String {
        let mut out = PROBABILITY_HEADER.join("\t");
        out.push('\n');
        for (id, p) in &self.entries {
            out.push_str(&tsv::escape_field(id));
            out.push('\t');
            out.push_str(&p.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses probability TSV. Values up to [`PROBABILITY_TOLERANCE`] outside
    /// `[0, 1]` are clamped; anything further out is rejected.
    pub fn parse(source_name: &str, member_id: &str, contents: &str) -> Result<Self> {
        let rows = tsv::data_rows(source_name, contents, &PROBABILITY_HEADER)?;
        let mut entries = IndexMap::with_capacity(rows.len());
        for (line, fields) in rows {
            let id = tsv::unescape_field(fields[0]).map_err(|m| Error::parse(source_name, line, m))?;
            if id.is_empty() {
                return Err(Error::parse(source_name, line, "empty id"));
            }
            let raw: f64 = fields[1].trim().parse().map_err(|_| {
                Error::parse(
                    source_name,
                    line,
                    format!("{:?} is not a decimal number", fields[1]),
                )
            })?;
            if !(-PROBABILITY_TOLERANCE..=1.0 + PROBABILITY_TOLERANCE).contains(&raw) {
                return Err(Error::invalid(format!(
                    "{source_name}:{line}: probability {raw} for id {id:?} is outside [0, 1]"
                )));
            }
            if entries.contains_key(&id) {
                return Err(Error::invalid(format!(
                    "{source_name}:{line}: duplicate id {id:?}"
                )));
            }
            entries.insert(id, raw.clamp(0.0, 1.0));
        }
        Ok(ProbabilityTable {
            member_id: member_id.to_owned(),
            entries,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        tsv::write_atomic(path, self.to_tsv().as_bytes())
    }
}

fn preview<'a>(ids: &[&'a str]) -> Vec<&'a str> {
    ids.iter().take(5).copied().collect()
}

/// Ordered ensemble members with their non-negative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    members: Vec<String>,
    weights: Vec<f64>,
}

impl EnsembleSpec {
    pub fn new(members: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("ensemble needs at least one member"));
        }
        if members.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} members but {} weights",
                members.len(),
                weights.len()
            )));
        }
        let mut seen = HashSet::new();
        for m in &members {
            if !seen.insert(m.as_str()) {
                return Err(Error::invalid(format!("duplicate member id {m:?}")));
            }
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::invalid(format!(
                "ensemble weights must be finite and non-negative, got {w}"
            )));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid(
                "all ensemble weights are zero; use majority voting (hard mode) instead",
            ));
        }
        Ok(EnsembleSpec { members, weights })
    }

    /// Every member weighted 1, which makes soft voting a plain average.
    pub fn equal_weights(members: Vec<String>) -> Result<Self> {
        let weights = vec![1.0; members.len()];
        EnsembleSpec::new(members, weights)
    }

    pub fn members(&self) -> &[String] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Serializes as `member_id<TAB>weight` TSV; row order is member order.
    pub fn to_tsv(&self) -> String {
        let mut out = SPEC_HEADER.join("\t");
        out.push('\n');
        for (m, w) in self.members.iter().zip(&self.weights) {
            out.push_str(&format!("{}\t{w}\n", tsv::escape_field(m)));
        }
        out
    }

    pub fn parse(source_name: &str, contents: &str) -> Result<Self> {
        let rows = tsv::data_rows(source_name, contents, &SPEC_HEADER)?;
        let mut members = Vec::with_capacity(rows.len());
        let mut weights = Vec::with_capacity(rows.len());
        for (line, fields) in rows {
            members.push(
                tsv::unescape_field(fields[0]).map_err(|m| Error::parse(source_name, line, m))?,
            );
            weights.push(fields[1].trim().parse::<f64>().map_err(|_| {
                Error::parse(source_name, line, format!("bad weight {:?}", fields[1]))
            })?);
        }
        EnsembleSpec::new(members, weights)
    }

    pub fn load(path: &Path) -> Result<Self> {
        EnsembleSpec::parse(&tsv::source_name(path), &tsv::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        tsv::write_atomic(path, self.to_tsv().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VoteMode {
    /// Weighted average of probabilities, then [`decide`].
    Soft,
    /// Threshold each member, then [`majority_vote`].
    Hard,
}

impl VoteMode {
    pub fn name(self) -> &'static str {
        match self {
            VoteMode::Soft => "soft",
            VoteMode::Hard => "hard",
        }
    }
}

impl fmt::Display for VoteMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for VoteMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "soft" => Ok(VoteMode::Soft),
            "hard" => Ok(VoteMode::Hard),
            other => Err(Error::invalid(format!(
                "unknown vote mode {other:?}; expected soft or hard"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberVote {
    pub member_id: String,
    pub probability: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleVerdict {
    pub id: String,
    /// Ensemble probability of class 1. In hard mode this is the share of
    /// members voting 1.
    pub p_positive: f64,
    pub label: ClassLabel,
    pub per_member: Vec<MemberVote>,
}

impl EnsembleVerdict {
    pub fn p_negative(&self) -> f64 {
        1.0 - self.p_positive
    }
}

pub fn verdicts_to_tsv(verdicts: &[EnsembleVerdict]) -> String {
    let mut out = VERDICT_HEADER.join("\t");
    out.push('\n');
    for v in verdicts {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            tsv::escape_field(&v.id),
            v.p_positive,
            v.label
        ));
    }
    out
}

/// Reads a verdict TSV back as `(id, p_positive, label)` rows.
pub fn parse_verdicts(source_name: &str, contents: &str) -> Result<Vec<(String, f64, ClassLabel)>> {
    let rows = tsv::data_rows(source_name, contents, &VERDICT_HEADER)?;
    rows.into_iter()
        .map(|(line, fields)| {
            let id = tsv::unescape_field(fields[0]).map_err(|m| Error::parse(source_name, line, m))?;
            let p: f64 = fields[1]
                .parse()
                .map_err(|_| Error::parse(source_name, line, format!("bad probability {:?}", fields[1])))?;
            let label = ClassLabel::parse(fields[2])
                .ok_or_else(|| Error::parse(source_name, line, format!("bad label {:?}", fields[2])))?;
            Ok((id, p, label))
        })
        .collect()
}

/// Sets each member's weight to the positive-class F1 of its thresholded
/// predictions on `validation`.
pub fn fit_weights(tables: &[ProbabilityTable], validation: &LabeledCorpus) -> Result<EnsembleSpec> {
    if tables.is_empty() {
        return Err(Error::invalid("no member probability tables given"));
    }
    let labels = validation.labels()?;
    let mut members = Vec::with_capacity(tables.len());
    let mut weights = Vec::with_capacity(tables.len());
    for table in tables {
        table.check_coverage(validation)?;
        let cm = ConfusionMatrix::from_pairs(
            labels
                .iter()
                .map(|(id, actual)| (threshold(table.entries[*id]), *actual)),
        );
        members.push(table.member_id.clone());
        weights.push(cm.f1());
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::invalid(
            "every member has validation F1 of 0, so no F1 weighting exists; \
             fall back to majority voting (hard mode)",
        ));
    }
    EnsembleSpec::new(members, weights)
}

/// Weighted, normalized linear combination of member probabilities.
pub fn soft_predict_proba(spec: &EnsembleSpec, probs: &[f64]) -> Result<f64> {
    if probs.len() != spec.len() {
        return Err(Error::invalid(format!(
            "expected {} member probabilities, got {}",
            spec.len(),
            probs.len()
        )));
    }
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} is outside [0, 1]")));
    }
    let total_weight: f64 = spec.weights.iter().sum();
    if total_weight <= 0.0 {
        return Err(Error::invalid("ensemble weights sum to zero"));
    }
    let weighted: f64 = spec.weights.iter().zip(probs).map(|(a, p)| a * p).sum();
    let lo = probs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // rounding can push the quotient an ulp past the convex hull
    Ok((weighted / total_weight).clamp(lo, hi))
}

/// Picks the more probable class; exactly 0.5 decides class 1.
pub fn decide(p_positive: f64) -> Result<ClassLabel> {
    if !(0.0..=1.0).contains(&p_positive) {
        return Err(Error::invalid(format!(
            "probability {p_positive} is outside [0, 1]"
        )));
    }
    Ok(threshold(p_positive))
}

fn threshold(p: f64) -> ClassLabel {
    ClassLabel::from_bool(p >= DECISION_THRESHOLD)
}

/// Modal label; an even split decides class 1.
pub fn majority_vote(votes: &[ClassLabel]) -> Result<ClassLabel> {
    if votes.is_empty() {
        return Err(Error::invalid("majority vote over no predictions"));
    }
    let positives = votes.iter().filter(|l| l.is_positive()).count();
    Ok(ClassLabel::from_bool(2 * positives >= votes.len()))
}

/// Looks up each spec member's table, in spec order.
fn tables_in_spec_order<'a>(
    spec: &EnsembleSpec,
    tables: &'a [ProbabilityTable],
) -> Result<Vec<&'a ProbabilityTable>> {
    spec.members
        .iter()
        .map(|m| {
            tables
                .iter()
                .find(|t| &t.member_id == m)
                .ok_or_else(|| Error::invalid(format!("no probability table for member {m:?}")))
        })
        .collect()
}

/// Combines member tables into one verdict per corpus example, in corpus order.
///
/// The corpus may be unlabeled.
pub fn predict_ensemble(
    spec: &EnsembleSpec,
    tables: &[ProbabilityTable],
    corpus: &LabeledCorpus,
    mode: VoteMode,
) -> Result<Vec<EnsembleVerdict>> {
    let ordered = tables_in_spec_order(spec, tables)?;
    for t in &ordered {
        t.check_coverage(corpus)?;
    }
    let mut probs = vec![0.0; ordered.len()];
    let mut votes = vec![ClassLabel::NonSelfReported; ordered.len()];
    corpus
        .ids()
        .map(|id| {
            for (i, t) in ordered.iter().enumerate() {
                probs[i] = t.entries[id];
                votes[i] = threshold(probs[i]);
            }
            let (p_positive, label, weights): (f64, ClassLabel, &[f64]) = match mode {
                VoteMode::Soft => {
                    let p = soft_predict_proba(spec, &probs)?;
                    (p, decide(p)?, &spec.weights)
                }
                VoteMode::Hard => {
                    let share = votes.iter().filter(|v| v.is_positive()).count() as f64
                        / votes.len() as f64;
                    (share, majority_vote(&votes)?, &[])
                }
            };
            let per_member = spec
                .members
                .iter()
                .zip(&probs)
                .enumerate()
                .map(|(i, (m, &p))| MemberVote {
                    member_id: m.clone(),
                    probability: p,
                    weight: weights.get(i).copied().unwrap_or(1.0),
                })
                .collect();
            Ok(EnsembleVerdict {
                id: id.to_owned(),
                p_positive,
                label,
                per_member,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleEvaluation {
    pub mode: VoteMode,
    pub verdicts: Vec<EnsembleVerdict>,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
}

/// Runs [`predict_ensemble`] on a labeled corpus and scores the verdicts.
pub fn evaluate_ensemble(
    spec: &EnsembleSpec,
    tables: &[ProbabilityTable],
    labeled: &LabeledCorpus,
    mode: VoteMode,
) -> Result<EnsembleEvaluation> {
    let labels = labeled.labels()?;
    if labels.is_empty() {
        return Err(Error::invalid("cannot evaluate on an empty corpus"));
    }
    let verdicts = predict_ensemble(spec, tables, labeled, mode)?;
    let confusion = ConfusionMatrix::from_pairs(
        verdicts
            .iter()
            .zip(&labels)
            .map(|(v, (_, actual))| (v.label, *actual)),
    );
    Ok(EnsembleEvaluation {
        mode,
        scores: confusion.scores(),
        confusion,
        verdicts,
    })
}

//! Labeled tweet corpora.
//!
//! A corpus file is TSV with header `id<TAB>text<TAB>label` (labeled) or
//! `id<TAB>text` (unlabeled). Labels are the literal characters `0` and `1`.
//! Text is kept verbatim apart from the field escapes described in [`crate::tsv`].

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tsv;

const LABELED_HEADER: [&str; 3] = ["id", "text", "label"];
const UNLABELED_HEADER: [&str; 2] = ["id", "text"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    NonSelfReported = 0,
    SelfReported = 1,
}

impl ClassLabel {
    pub fn from_bool(positive: bool) -> Self {
        if positive {
            ClassLabel::SelfReported
        } else {
            ClassLabel::NonSelfReported
        }
    }

    pub fn is_positive(self) -> bool {
        self == ClassLabel::SelfReported
    }

    pub fn as_u8(self) -> u8 {
        self as u8
    }

    /// Parses the literal `0` or `1`.
    pub fn parse(field: &str) -> Option<Self> {
        match field {
            "0" => Some(ClassLabel::NonSelfReported),
            "1" => Some(ClassLabel::SelfReported),
            _ => None,
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    /// `None` for examples read from an unlabeled corpus.
    pub label: Option<ClassLabel>,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: ClassLabel) -> Self {
        LabeledExample {
            id: id.into(),
            text: text.into(),
            label: Some(label),
        }
    }

    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        LabeledExample {
            id: id.into(),
            text: text.into(),
            label: None,
        }
    }
}

/// An ordered, validated collection of examples.
///
/// Either every example carries a label or none does.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    split_name: String,
    examples: Vec<LabeledExample>,
    labeled: bool,
}

impl LabeledCorpus {
    pub fn new(split_name: impl Into<String>, examples: Vec<LabeledExample>) -> Result<Self> {
        let labeled = examples.first().is_none_or(|e| e.label.is_some());
        let mut seen = HashSet::with_capacity(examples.len());
        for ex in &examples {
            if ex.id.is_empty() {
                return Err(Error::invalid("example id must be non-empty"));
            }
            if !seen.insert(ex.id.as_str()) {
                return Err(Error::invalid(format!("duplicate example id {:?}", ex.id)));
            }
            if ex.text.trim().is_empty() {
                return Err(Error::invalid(format!(
                    "example {:?} has empty text",
                    ex.id
                )));
            }
            if ex.label.is_some() != labeled {
                return Err(Error::invalid(format!(
                    "example {:?}: corpus mixes labeled and unlabeled examples",
                    ex.id
                )));
            }
        }
        Ok(LabeledCorpus {
            split_name: split_name.into(),
            examples,
            labeled,
        })
    }

    pub fn split_name(&self) -> &str {
        &self.split_name
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// An empty corpus counts as labeled.
    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.id.as_str())
    }

    /// `(id, label)` pairs in corpus order; fails on an unlabeled corpus.
    pub fn labels(&self) -> Result<Vec<(&str, ClassLabel)>> {
        self.require_labeled()?;
        Ok(self
            .examples
            .iter()
            .map(|e| (e.id.as_str(), e.label.expect("labeled corpus")))
            .collect())
    }

    pub(crate) fn require_labeled(&self) -> Result<()> {
        if self.labeled {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "corpus {:?} is unlabeled",
                self.split_name
            )))
        }
    }

    /// Serializes in the corpus TSV format. Round-trips through [`parse_corpus`].
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        if self.labeled {
            out.push_str(&LABELED_HEADER.join("\t"));
        } else {
            out.push_str(&UNLABELED_HEADER.join("\t"));
        }
        out.push('\n');
        for ex in &self.examples {
            out.push_str(&tsv::escape_field(&ex.id));
            out.push('\t');
            out.push_str(&tsv::escape_field(&ex.text));
            if let Some(label) = ex.label {
                out.push('\t');
                out.push_str(&label.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        tsv::write_atomic(path, self.to_tsv().as_bytes())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassDistribution {
    pub negatives: usize,
    pub positives: usize,
    pub total: usize,
    pub positive_rate: f64,
}

impl ClassDistribution {
    /// Builds a distribution from class counts; fails when both are zero.
    pub fn from_counts(negatives: usize, positives: usize) -> Result<Self> {
        let total = negatives + positives;
        if total == 0 {
            return Err(Error::invalid("class distribution of an empty corpus"));
        }
        Ok(ClassDistribution {
            negatives,
            positives,
            total,
            positive_rate: positives as f64 / total as f64,
        })
    }
}

/// Loads a corpus file. The split name is the file stem.
pub fn load_corpus(path: &Path, labeled: bool) -> Result<LabeledCorpus> {
    let contents = tsv::read_to_string(path)?;
    let split = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_corpus(&tsv::source_name(path), &split, &contents, labeled)
}

/// Parses corpus TSV from memory. `source_name` only appears in error messages.
pub fn parse_corpus(
    source_name: &str,
    split_name: &str,
    contents: &str,
    labeled: bool,
) -> Result<LabeledCorpus> {
    let header: &[&str] = if labeled {
        &LABELED_HEADER
    } else {
        &UNLABELED_HEADER
    };
    let rows = tsv::data_rows(source_name, contents, header)?;
    let mut examples = Vec::with_capacity(rows.len());
    let mut seen = HashSet::with_capacity(rows.len());
    for (line, fields) in rows {
        let unescape =
            |f: &str| tsv::unescape_field(f).map_err(|m| Error::parse(source_name, line, m));
        let id = unescape(fields[0])?;
        let text = unescape(fields[1])?;
        if id.is_empty() {
            return Err(line_invalid(source_name, line, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(line_invalid(
                source_name,
                line,
                &format!("duplicate id {id:?}"),
            ));
        }
        if text.trim().is_empty() {
            return Err(line_invalid(
                source_name,
                line,
                &format!("empty text for id {id:?}"),
            ));
        }
        let label = if labeled {
            let label = ClassLabel::parse(fields[2]).ok_or_else(|| {
                line_invalid(
                    source_name,
                    line,
                    &format!("label {:?} for id {id:?} is not 0 or 1", fields[2]),
                )
            })?;
            Some(label)
        } else {
            None
        };
        examples.push(LabeledExample { id, text, label });
    }
    LabeledCorpus::new(split_name, examples)
}

fn line_invalid(source_name: &str, line: usize, message: &str) -> Error {
    Error::invalid(format!("{source_name}:{line}: {message}"))
}

pub fn corpus_stats(corpus: &LabeledCorpus) -> Result<ClassDistribution> {
    corpus.require_labeled()?;
    if corpus.is_empty() {
        return Err(Error::invalid(format!(
            "corpus {:?} has no examples",
            corpus.split_name
        )));
    }
    let positives = corpus
        .examples
        .iter()
        .filter(|e| e.label == Some(ClassLabel::SelfReported))
        .count();
    ClassDistribution::from_counts(corpus.len() - positives, positives)
}

/// Splits a labeled corpus into two parts with per-class proportions preserved.
///
/// Each class contributes `round(fraction * class_count)` examples to the first
/// part, chosen by a seeded shuffle. Both parts keep the input order.
pub fn stratified_split(
    corpus: &LabeledCorpus,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "split fraction must lie in (0, 1), got {fraction}"
        )));
    }
    corpus.require_labeled()?;
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, ex) in corpus.examples.iter().enumerate() {
        by_class[ex.label.expect("labeled corpus").as_u8() as usize].push(i);
    }
    if by_class.iter().any(Vec::is_empty) {
        return Err(Error::invalid(
            "stratified split needs at least one example of each class",
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_first = vec![false; corpus.len()];
    for indices in &mut by_class {
        indices.shuffle(&mut rng);
        let take = (fraction * indices.len() as f64).round() as usize;
        for &i in &indices[..take] {
            in_first[i] = true;
        }
    }

    let (mut first, mut second) = (Vec::new(), Vec::new());
    for (ex, &first_part) in corpus.examples.iter().zip(&in_first) {
        if first_part {
            first.push(ex.clone());
        } else {
            second.push(ex.clone());
        }
    }
    let name = &corpus.split_name;
    Ok((
        LabeledCorpus::new(format!("{name}-a"), first)?,
        LabeledCorpus::new(format!("{name}-b"), second)?,
    ))
}

//! Logistic-regression member over hashed features.

use std::path::Path;

use crate::corpus::{ClassLabel, LabeledCorpus};
use crate::ensemble::ProbabilityTable;
use crate::error::{Error, Result};
use crate::tsv;

use super::features::{featurize, FeatureVector, HASH_DIM};

const SNAPSHOT_MAGIC: &str = "ipvote-model";
const SNAPSHOT_VERSION: u32 = 1;

/// Linear scorer `s = w . x + b`; the positive-class probability is `sigmoid(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemberModel {
    member_id: String,
    weights: Vec<f64>,
    bias: f64,
}

impl MemberModel {
    /// All-zero model of dimension [`HASH_DIM`].
    pub fn zeros(member_id: impl Into<String>) -> Self {
        MemberModel::zeros_with_dim(member_id, HASH_DIM)
    }

    pub fn zeros_with_dim(member_id: impl Into<String>, dim: usize) -> Self {
        MemberModel {
            member_id: member_id.into(),
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn from_parts(member_id: impl Into<String>, weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("model dimension must be at least 1"));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        Ok(MemberModel {
            member_id: member_id.into(),
            weights,
            bias,
        })
    }

    pub fn member_id(&self) -> &str {
        &self.member_id
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn with_member_id(mut self, member_id: impl Into<String>) -> Self {
        self.member_id = member_id.into();
        self
    }

    pub(crate) fn set_parameters(&mut self, weights: &[f64], bias: f64) {
        self.weights.copy_from_slice(weights);
        self.bias = bias;
    }

    fn check_dim(&self, x: &FeatureVector) -> Result<()> {
        if x.min_dim() > self.dim() {
            return Err(Error::invalid(format!(
                "feature index {} out of range for model dimension {}",
                x.min_dim() - 1,
                self.dim()
            )));
        }
        Ok(())
    }

    pub fn score(&self, x: &FeatureVector) -> f64 {
        x.dot(&self.weights) + self.bias
    }

    pub fn probability(&self, x: &FeatureVector) -> f64 {
        sigmoid(self.score(x))
    }

    /// Versioned text snapshot. Only non-zero weights are listed; every float
    /// uses the shortest decimal that round-trips exactly.
    ///
    /// ```text
    /// ipvote-model 1
    /// member_id<TAB><escaped id>
    /// dim<TAB><D>
    /// bias<TAB><b>
    /// nonzero<TAB><k>
    /// <index><TAB><weight>      (k rows, increasing index)
    /// ```
    pub fn to_snapshot(&self) -> String {
        let nonzero: Vec<(usize, f64)> = self
            .weights
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, w)| w != 0.0)
            .collect();
        let mut out = format!(
            "{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\nmember_id\t{}\ndim\t{}\nbias\t{}\nnonzero\t{}\n",
            tsv::escape_field(&self.member_id),
            self.dim(),
            self.bias,
            nonzero.len()
        );
        for (i, w) in nonzero {
            out.push_str(&format!("{i}\t{w}\n"));
        }
        out
    }

    pub fn parse_snapshot(source_name: &str, contents: &str) -> Result<Self> {
        let mut lines = tsv::numbered_lines(contents);
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(source_name, 0, format!("snapshot truncated before {what}")))
        };
        let (line, magic) = next("header")?;
        if magic != format!("{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}") {
            return Err(Error::parse(
                source_name,
                line,
                format!("expected \"{SNAPSHOT_MAGIC} {SNAPSHOT_VERSION}\", found {magic:?}"),
            ));
        }
        let mut field = |key: &str| -> Result<(usize, String)> {
            let (line, text) = next(key)?;
            match text.split_once('\t') {
                Some((k, v)) if k == key => Ok((line, v.to_owned())),
                _ => Err(Error::parse(source_name, line, format!("expected {key} field"))),
            }
        };
        let (line, id) = field("member_id")?;
        let member_id = tsv::unescape_field(&id).map_err(|m| Error::parse(source_name, line, m))?;
        let (line, dim) = field("dim")?;
        let dim: usize = dim
            .parse()
            .map_err(|_| Error::parse(source_name, line, "bad dim"))?;
        let (line, bias) = field("bias")?;
        let bias: f64 = bias
            .parse()
            .map_err(|_| Error::parse(source_name, line, "bad bias"))?;
        let (line, nonzero) = field("nonzero")?;
        let nonzero: usize = nonzero
            .parse()
            .map_err(|_| Error::parse(source_name, line, "bad nonzero count"))?;

        let mut weights = vec![0.0; dim];
        let mut count = 0;
        for (line, text) in lines {
            let (i, w) = text
                .split_once('\t')
                .and_then(|(i, w)| Some((i.parse::<usize>().ok()?, w.parse::<f64>().ok()?)))
                .ok_or_else(|| Error::parse(source_name, line, "expected index<TAB>weight"))?;
            if i >= dim {
                return Err(Error::parse(source_name, line, format!("index {i} >= dim {dim}")));
            }
            weights[i] = w;
            count += 1;
        }
        if count != nonzero {
            return Err(Error::parse(
                source_name,
                0,
                format!("snapshot lists {count} weights but declares {nonzero}"),
            ));
        }
        MemberModel::from_parts(member_id, weights, bias)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        tsv::write_atomic(path, self.to_snapshot().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        MemberModel::parse_snapshot(&tsv::source_name(path), &tsv::read_to_string(path)?)
    }
}

/// Logistic function that never evaluates `exp` of a positive argument.
pub fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^s)` without overflow.
pub fn softplus(s: f64) -> f64 {
    s.max(0.0) + (-s.abs()).exp().ln_1p()
}

/// Per-example log loss `-[y ln sigmoid(s) + (1-y) ln(1 - sigmoid(s))]`.
pub fn log_loss(s: f64, label: ClassLabel) -> f64 {
    let y = f64::from(label.as_u8());
    softplus(s) - y * s
}

/// Mean log loss over `batch` plus `(l2 / 2) * |w|^2`, and its gradient.
///
/// The gradient has `dim + 1` entries: one per weight, then the bias. The bias
/// is not regularized.
pub fn loss_and_gradient(
    model: &MemberModel,
    batch: &[(FeatureVector, ClassLabel)],
    l2: f64,
) -> Result<(f64, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::invalid("loss over an empty batch"));
    }
    let n = batch.len() as f64;
    let dim = model.dim();
    let mut grad = vec![0.0; dim + 1];
    let mut data_loss = 0.0;
    for (x, label) in batch {
        model.check_dim(x)?;
        let s = model.score(x);
        data_loss += log_loss(s, *label);
        let residual = sigmoid(s) - f64::from(label.as_u8());
        for &(i, v) in x.entries() {
            grad[i as usize] += residual * v;
        }
        grad[dim] += residual;
    }
    for g in &mut grad {
        *g /= n;
    }
    let mut norm_sq = 0.0;
    for (g, w) in grad.iter_mut().zip(&model.weights) {
        *g += l2 * w;
        norm_sq += w * w;
    }
    let loss = data_loss / n + 0.5 * l2 * norm_sq;
    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite loss {loss}")));
    }
    Ok((loss, grad))
}

/// Positive-class probability for every example of `corpus`, in corpus order.
pub fn predict_proba(model: &MemberModel, corpus: &LabeledCorpus) -> Result<ProbabilityTable> {
    let entries = corpus.examples().iter().map(|ex| {
        let x = featurize(&ex.text);
        (ex.id.clone(), model.probability(&x))
    });
    ProbabilityTable::new(model.member_id.clone(), entries)
}

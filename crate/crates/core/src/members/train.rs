//! Seeded SGD training with best-epoch checkpoint selection.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{corpus_stats, ClassLabel, LabeledCorpus};
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;

use super::features::{featurize, FeatureVector};
use super::model::{log_loss, sigmoid, MemberModel};

/// Validation metric that picks the checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectionMetric {
    F1,
    Accuracy,
}

impl SelectionMetric {
    pub fn name(self) -> &'static str {
        match self {
            SelectionMetric::F1 => "f1",
            SelectionMetric::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for SelectionMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f1" => Ok(SelectionMetric::F1),
            "accuracy" => Ok(SelectionMetric::Accuracy),
            other => Err(Error::invalid(format!(
                "unknown selection metric {other:?}; expected f1 or accuracy"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub selection_metric: SelectionMetric,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 0,
            selection_metric: SelectionMetric::F1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if !(self.l2 >= 0.0 && self.l2.is_finite()) {
            return Err(Error::invalid("l2 must be non-negative"));
        }
        if self.learning_rate * self.l2 >= 1.0 {
            return Err(Error::invalid(
                "learning_rate * l2 must be below 1 or weight decay flips sign",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub f1: f64,
    pub accuracy: f64,
    /// Mean regularized training loss over the epoch's SGD steps.
    pub train_loss: f64,
}

impl EpochRecord {
    pub fn metric(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::F1 => self.f1,
            SelectionMetric::Accuracy => self.accuracy,
        }
    }
}

/// Per-epoch validation trace. Epoch indices run 0, 1, 2, ... in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochHistory {
    records: Vec<EpochRecord>,
}

impl EpochHistory {
    pub fn new() -> Self {
        EpochHistory::default()
    }

    /// Appends the next epoch's metrics.
    pub fn push(&mut self, f1: f64, accuracy: f64, train_loss: f64) -> Result<()> {
        for (name, v) in [("f1", f1), ("accuracy", accuracy)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("epoch {name} {v} outside [0, 1]")));
            }
        }
        self.records.push(EpochRecord {
            epoch: self.records.len(),
            f1,
            accuracy,
            train_loss,
        });
        Ok(())
    }

    /// Builds a history from `(f1, accuracy)` pairs with zero training loss.
    pub fn from_metrics<I: IntoIterator<Item = (f64, f64)>>(metrics: I) -> Result<Self> {
        let mut history = EpochHistory::new();
        for (f1, accuracy) in metrics {
            history.push(f1, accuracy, 0.0)?;
        }
        Ok(history)
    }

    pub fn records(&self) -> &[EpochRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("epoch\tf1\taccuracy\ttrain_loss\n");
        for r in &self.records {
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\n",
                r.epoch, r.f1, r.accuracy, r.train_loss
            ));
        }
        out
    }
}

/// Index of the best epoch under `metric`; the earliest epoch wins ties.
pub fn select_best_epoch(history: &EpochHistory, metric: SelectionMetric) -> Result<usize> {
    let mut records = history.records.iter();
    let first = records
        .next()
        .ok_or_else(|| Error::invalid("cannot select an epoch from an empty history"))?;
    let mut best = (first.epoch, first.metric(metric));
    for r in records {
        if r.metric(metric) > best.1 {
            best = (r.epoch, r.metric(metric));
        }
    }
    Ok(best.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedMember {
    /// Parameters as they were at the end of `selected_epoch`.
    pub model: MemberModel,
    pub history: EpochHistory,
    pub selected_epoch: usize,
}

/// Weight vector stored as `scale * raw` so L2 decay costs O(1) per step.
struct ScaledWeights {
    raw: Vec<f64>,
    scale: f64,
}

impl ScaledWeights {
    const MIN_SCALE: f64 = 1e-6;

    fn dot(&self, x: &FeatureVector) -> f64 {
        self.scale * x.dot(&self.raw)
    }

    /// w <- decay * w - step * x
    fn decay_and_step(&mut self, decay: f64, step: f64, x: &FeatureVector) {
        self.scale *= decay;
        let raw_step = step / self.scale;
        for &(i, v) in x.entries() {
            self.raw[i as usize] -= raw_step * v;
        }
        if self.scale < Self::MIN_SCALE {
            self.fold();
        }
    }

    fn fold(&mut self) {
        if self.scale != 1.0 {
            for w in &mut self.raw {
                *w *= self.scale;
            }
            self.scale = 1.0;
        }
    }

    fn norm_sq(&self) -> f64 {
        self.scale * self.scale * self.raw.iter().map(|w| w * w).sum::<f64>()
    }
}

fn validation_metrics(
    weights: &ScaledWeights,
    bias: f64,
    features: &[FeatureVector],
    labels: &[ClassLabel],
) -> (f64, f64) {
    let cm = ConfusionMatrix::from_pairs(features.iter().zip(labels).map(|(x, &actual)| {
        let p = sigmoid(weights.dot(x) + bias);
        (ClassLabel::from_bool(p >= 0.5), actual)
    }));
    (cm.f1(), cm.accuracy())
}

/// Trains one member with per-example SGD and returns the checkpoint chosen by
/// [`select_best_epoch`] under `config.selection_metric`.
///
/// Each epoch visits the training set in a fresh order drawn from a ChaCha8
/// generator seeded with `config.seed`, so the result is bit-reproducible.
pub fn train_member(
    member_id: &str,
    train: &LabeledCorpus,
    validation: &LabeledCorpus,
    config: &TrainConfig,
) -> Result<TrainedMember> {
    config.validate()?;
    let dist = corpus_stats(train)?;
    if dist.positives == 0 || dist.negatives == 0 {
        return Err(Error::invalid(format!(
            "training corpus {:?} must contain both classes",
            train.split_name()
        )));
    }
    let val_labels: Vec<ClassLabel> = validation.labels()?.into_iter().map(|(_, l)| l).collect();
    if val_labels.is_empty() {
        return Err(Error::invalid("validation corpus is empty"));
    }

    let train_set: Vec<(FeatureVector, ClassLabel)> = train
        .examples()
        .iter()
        .map(|e| (featurize(&e.text), e.label.expect("labeled corpus")))
        .collect();
    let val_features: Vec<FeatureVector> = validation
        .examples()
        .iter()
        .map(|e| featurize(&e.text))
        .collect();

    let mut model = MemberModel::zeros(member_id);
    let mut weights = ScaledWeights {
        raw: vec![0.0; model.dim()],
        scale: 1.0,
    };
    let mut bias = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let decay = 1.0 - config.learning_rate * config.l2;
    let lr = config.learning_rate;

    let mut history = EpochHistory::new();
    let mut best_so_far = f64::NEG_INFINITY;
    let mut tracked_epoch = 0;

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for &i in &order {
            let (x, label) = &train_set[i];
            let s = weights.dot(x) + bias;
            loss_sum += log_loss(s, *label);
            let residual = sigmoid(s) - f64::from(label.as_u8());
            weights.decay_and_step(decay, lr * residual, x);
            bias -= lr * residual;
        }
        weights.fold();
        let train_loss = loss_sum / train_set.len() as f64 + 0.5 * config.l2 * weights.norm_sq();
        if !train_loss.is_finite() || !bias.is_finite() {
            return Err(Error::Training(format!(
                "member {member_id:?}: non-finite loss at epoch {epoch}"
            )));
        }

        let (f1, accuracy) = validation_metrics(&weights, bias, &val_features, &val_labels);
        history.push(f1, accuracy, train_loss)?;

        let score = history.records[epoch].metric(config.selection_metric);
        if score > best_so_far {
            best_so_far = score;
            tracked_epoch = epoch;
            model.set_parameters(&weights.raw, bias);
        }
    }

    let selected_epoch = select_best_epoch(&history, config.selection_metric)?;
    debug_assert_eq!(selected_epoch, tracked_epoch);
    Ok(TrainedMember {
        model,
        history,
        selected_epoch,
    })
}

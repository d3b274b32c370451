//! Binary classification metrics with class `1` as the positive class.
//!
//! Precision, recall and F1 are defined as 0 whenever their denominator is 0.

use std::fmt;

use indexmap::IndexMap;

use crate::corpus::ClassLabel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    /// Tallies `(predicted, actual)` pairs.
    pub fn from_pairs<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (ClassLabel, ClassLabel)>,
    {
        let mut cm = ConfusionMatrix::default();
        for (predicted, actual) in pairs {
            match (predicted.is_positive(), actual.is_positive()) {
                (true, true) => cm.tp += 1,
                (true, false) => cm.fp += 1,
                (false, true) => cm.fn_ += 1,
                (false, false) => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Row sum for actual class 1.
    pub fn actual_positives(&self) -> u64 {
        self.tp + self.fn_
    }

    /// Row sum for actual class 0.
    pub fn actual_negatives(&self) -> u64 {
        self.fp + self.tn
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        harmonic_mean(self.precision(), self.recall())
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    pub fn scores(&self) -> Scores {
        Scores {
            precision: self.precision(),
            recall: self.recall(),
            f1: self.f1(),
            accuracy: self.accuracy(),
        }
    }

    /// Renders a 2x2 grid with actual classes as rows and predictions as columns.
    pub fn render_grid(&self) -> String {
        let cells = [self.tn, self.fp, self.fn_, self.tp];
        let width = cells
            .iter()
            .map(|c| c.to_string().len())
            .max()
            .unwrap_or(1)
            .max("pred 0".len());
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10}{:>w$}  {:>w$}\n",
            "",
            "pred 0",
            "pred 1",
            w = width
        ));
        out.push_str(&format!(
            "{:<10}{:>w$}  {:>w$}\n",
            "actual 0",
            self.tn,
            self.fp,
            w = width
        ));
        out.push_str(&format!(
            "{:<10}{:>w$}  {:>w$}\n",
            "actual 1",
            self.fn_,
            self.tp,
            w = width
        ));
        out
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic_mean(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    Precision,
    Recall,
    F1,
    Accuracy,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Precision, Metric::Recall, Metric::F1, Metric::Accuracy];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Precision => "precision",
            Metric::Recall => "recall",
            Metric::F1 => "f1",
            Metric::Accuracy => "accuracy",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub metric: Metric,
    pub value: f64,
}

/// All four scalar metrics of one confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

impl Scores {
    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Precision => self.precision,
            Metric::Recall => self.recall,
            Metric::F1 => self.f1,
            Metric::Accuracy => self.accuracy,
        }
    }
}

/// Mean and sample standard deviation (n - 1 denominator) of a list of scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreSummary {
    pub mean: f64,
    pub stdev: f64,
    pub n: usize,
}

impl ScoreSummary {
    /// Two-row `Mean F1` / `Stdev` layout, three decimals.
    pub fn render_rows(&self, label: &str) -> String {
        format!(
            "Mean {label}\t{:.3}\nStdev\t{:.3}\n",
            self.mean, self.stdev
        )
    }
}

/// Tallies predictions against labels over the same id set.
pub fn confusion_matrix(
    predictions: &IndexMap<String, ClassLabel>,
    labels: &IndexMap<String, ClassLabel>,
) -> Result<ConfusionMatrix> {
    if labels.is_empty() && predictions.is_empty() {
        return Err(Error::invalid("confusion matrix over an empty id set"));
    }
    let missing: Vec<&str> = labels
        .keys()
        .filter(|id| !predictions.contains_key(*id))
        .map(String::as_str)
        .collect();
    let extra: Vec<&str> = predictions
        .keys()
        .filter(|id| !labels.contains_key(*id))
        .map(String::as_str)
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::invalid(format!(
            "prediction ids do not match label ids; missing predictions: {missing:?}; extra predictions: {extra:?}"
        )));
    }
    Ok(ConfusionMatrix::from_pairs(
        labels.iter().map(|(id, &actual)| (predictions[id], actual)),
    ))
}

pub fn score_from_confusion(cm: &ConfusionMatrix, metric: Metric) -> Score {
    Score {
        metric,
        value: cm.scores().get(metric),
    }
}

/// Harmonic mean of precision and recall.
pub fn f1_from_pr(precision: f64, recall: f64) -> Result<f64> {
    for (name, v) in [("precision", precision), ("recall", recall)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!("{name} {v} is outside [0, 1]")));
        }
    }
    Ok(harmonic_mean(precision, recall))
}

pub fn aggregate_scores(scores: &[f64]) -> Result<ScoreSummary> {
    if scores.is_empty() {
        return Err(Error::invalid("cannot summarize an empty list of scores"));
    }
    let n = scores.len();
    let mean = scores.iter().sum::<f64>() / n as f64;
    let stdev = if n == 1 {
        0.0
    } else {
        let ss: f64 = scores.iter().map(|s| (s - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    };
    Ok(ScoreSummary { mean, stdev, n })
}

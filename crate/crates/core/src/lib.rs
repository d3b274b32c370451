//! Binary tweet classification toolkit built around weighted soft-voting
//! ensembles.
//!
//! The crate is organised by stage of the workflow:
//!
//! - [`corpus`]: labeled TSV corpora, class distributions and stratified splits
//! - [`members`]: hashed n-gram logistic-regression members trained with
//!   best-epoch checkpoint selection, plus loading of external probability tables
//! - [`ensemble`]: F1-derived member weights, weighted soft voting and majority voting
//! - [`metrics`]: confusion matrices, precision / recall / F1 / accuracy and
//!   mean ± sample-stdev summaries
//! - [`synth`]: seeded synthetic corpora for desk-scale runs
//!
//! Class `1` is the positive class everywhere.

pub mod corpus;
pub mod ensemble;
mod error;
pub mod members;
pub mod metrics;
pub mod synth;
pub mod tsv;

pub use corpus::{ClassDistribution, ClassLabel, LabeledCorpus, LabeledExample};
pub use ensemble::{EnsembleSpec, EnsembleVerdict, ProbabilityTable, VoteMode};
pub use error::{Error, Result};
pub use metrics::{ConfusionMatrix, Metric, Score, ScoreSummary, Scores};

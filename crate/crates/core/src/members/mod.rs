//! Ensemble members.
//!
//! Native members are logistic regressions over hashed unigram and bigram
//! counts, trained by seeded SGD with the checkpoint picked from a per-epoch
//! validation history. Members produced elsewhere (for example fine-tuned
//! transformers) join through [`load_external_probabilities`].

mod features;
mod model;
mod train;

use std::path::Path;

pub use features::{feature_index, featurize, fnv1a_64, ngrams, tokenize, FeatureVector, HASH_BITS, HASH_DIM};
pub use model::{loss_and_gradient, predict_proba, sigmoid, softplus, MemberModel};
pub use train::{
    select_best_epoch, train_member, EpochHistory, EpochRecord, SelectionMetric, TrainConfig,
    TrainedMember,
};

use crate::ensemble::ProbabilityTable;
use crate::error::Result;
use crate::tsv;

/// Member id implied by a probability file name: everything before the first `.`.
///
/// `roberta-3.val.prob.tsv` belongs to member `roberta-3`.
pub fn member_id_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    match name.split_once('.') {
        Some((stem, _)) if !stem.is_empty() => stem.to_owned(),
        _ => name,
    }
}

/// Reads a probability TSV (`id<TAB>prob_positive`) written by any tool.
pub fn load_external_probabilities(path: &Path) -> Result<ProbabilityTable> {
    let contents = tsv::read_to_string(path)?;
    ProbabilityTable::parse(&tsv::source_name(path), &member_id_from_path(path), &contents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::fs;

    #[test]
    fn member_id_is_file_prefix() {
        assert_eq!(member_id_from_path(Path::new("/x/roberta-3.val.prob.tsv")), "roberta-3");
        assert_eq!(member_id_from_path(Path::new("plain")), "plain");
    }

    #[test]
    fn loads_external_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ext.prob.tsv");
        fs::write(&path, "id\tprob_positive\nt1\t0.91\nt2\t0.07\n").unwrap();
        let table = load_external_probabilities(&path).unwrap();
        assert_eq!(table.member_id(), "ext");
        assert_eq!(table.len(), 2);

        fs::write(&path, "id\tprob_positive\nt3\t1.2\n").unwrap();
        let err = load_external_probabilities(&path).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)) && err.to_string().contains("t3"));

        let missing = dir.path().join("nope.tsv");
        assert!(load_external_probabilities(&missing).unwrap_err().is_io_or_parse());
    }
}

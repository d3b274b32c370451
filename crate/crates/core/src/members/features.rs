//! Hashed unigram + bigram term-frequency features.
//!
//! Text is lowercased and split into maximal runs of alphanumeric characters,
//! so whitespace and punctuation both separate tokens. Every unigram and every
//! adjacent-token bigram (the two tokens joined by one space) is hashed with
//! 64-bit FNV-1a over its UTF-8 bytes and reduced modulo [`HASH_DIM`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub const HASH_BITS: u32 = 18;
pub const HASH_DIM: usize = 1 << HASH_BITS;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a_64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn feature_index(feature: &str) -> u32 {
    (fnv1a_64(feature.as_bytes()) % HASH_DIM as u64) as u32
}

/// Sparse feature vector with strictly increasing indices and positive values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureVector {
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Accumulates `(index, value)` pairs; repeated indices are summed.
    pub fn from_pairs<I: IntoIterator<Item = (u32, f64)>>(pairs: I) -> Result<Self> {
        let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
        for (index, value) in pairs {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::invalid(format!(
                    "feature {index} has non-positive or non-finite value {value}"
                )));
            }
            *acc.entry(index).or_default() += value;
        }
        Ok(FeatureVector {
            entries: acc.into_iter().collect(),
        })
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One past the largest index, or 0 when empty.
    pub fn min_dim(&self) -> usize {
        self.entries.last().map_or(0, |&(i, _)| i as usize + 1)
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

/// Unigram and bigram feature strings, before hashing.
pub fn ngrams(text: &str) -> Vec<String> {
    let tokens = tokenize(text);
    let bigrams = tokens.windows(2).map(|w| format!("{} {}", w[0], w[1]));
    tokens.iter().cloned().chain(bigrams).collect()
}

pub fn featurize(text: &str) -> FeatureVector {
    let mut acc: BTreeMap<u32, f64> = BTreeMap::new();
    for gram in ngrams(text) {
        *acc.entry(feature_index(&gram)).or_default() += 1.0;
    }
    FeatureVector {
        entries: acc.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fnv_reference_values() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a_64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a_64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a_64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn three_words_give_five_features() {
        assert_eq!(ngrams("I am scared"), ["i", "am", "scared", "i am", "am scared"]);
        let fv = featurize("I am scared");
        assert_eq!(fv.entries().iter().map(|e| e.1).sum::<f64>(), 5.0);
        assert_eq!(fv.len(), 5);
    }

    #[test]
    fn empty_text_has_no_features() {
        assert!(featurize("").is_empty());
        assert!(featurize("  ... !!").is_empty());
    }

    #[test]
    fn case_folding() {
        assert_eq!(featurize("Scared"), featurize("scared"));
    }

    #[test]
    fn punctuation_splits_tokens() {
        assert_eq!(tokenize("he hit me...again!! #DV"), ["he", "hit", "me", "again", "dv"]);
    }

    #[test]
    fn repeated_tokens_accumulate() {
        let fv = featurize("no no no");
        let no = feature_index("no");
        let no_no = feature_index("no no");
        assert_eq!(fv.entries(), {
            let mut e = vec![(no, 3.0), (no_no, 2.0)];
            e.sort_by_key(|x| x.0);
            e
        }.as_slice());
    }

    #[test]
    fn from_pairs_merges_and_validates() {
        let fv = FeatureVector::from_pairs([(3, 1.0), (1, 2.0), (3, 0.5)]).unwrap();
        assert_eq!(fv.entries(), &[(1, 2.0), (3, 1.5)]);
        assert_eq!(fv.min_dim(), 4);
        assert!(FeatureVector::from_pairs([(0, 0.0)]).is_err());
        assert!(FeatureVector::from_pairs([(0, f64::NAN)]).is_err());
    }

    proptest! {
        #[test]
        fn features_are_in_range_and_positive(text in "\\PC{0,80}") {
            let fv = featurize(&text);
            prop_assert!(fv.entries().windows(2).all(|w| w[0].0 < w[1].0));
            for &(i, v) in fv.entries() {
                prop_assert!((i as usize) < HASH_DIM);
                prop_assert!(v > 0.0);
            }
            prop_assert_eq!(fv, featurize(&text));
        }
    }
}

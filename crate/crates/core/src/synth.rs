//! Seeded synthetic tweet corpora for desk-scale runs.
//!
//! Each split has exactly `round(size * positive_rate)` positives at random
//! positions. A tweet is 8 to 16 tokens; each token is a neutral word with
//! probability [`SynthConfig::neutral_rate`], otherwise a cue word. Cue words
//! come from the example's own class vocabulary, except that with probability
//! [`SynthConfig::flip_rate`] they are drawn from the opposite class instead.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{ClassLabel, LabeledCorpus, LabeledExample};
use crate::error::{Error, Result};

const POSITIVE_CUES: &[&str] = &[
    "i", "me", "my", "boyfriend", "husband", "ex", "he", "hit", "choked", "pushed", "slapped",
    "scared", "bruises", "yelled", "threatened", "afraid", "hurt", "escaped", "survived", "myself",
    "grabbed", "punched", "locked", "controlling", "jealous",
];

const NEGATIVE_CUES: &[&str] = &[
    "news", "report", "article", "police", "charged", "court", "awareness", "statistics",
    "campaign", "victims", "women", "study", "minister", "law", "hotline", "celebrity",
    "arrested", "sentenced", "month", "shelter", "survey", "officials", "bill", "according",
    "charity",
];

const NEUTRAL: &[&str] = &[
    "the", "a", "and", "today", "really", "just", "this", "that", "so", "about", "people", "all",
    "time", "know", "think", "why", "how", "what", "never", "again", "still", "day", "night",
    "home", "life", "year", "years", "violence", "domestic", "abuse", "relationship", "partner",
    "love", "family", "friend", "story", "because", "when", "after", "before",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub train_size: usize,
    pub validation_size: usize,
    pub positive_rate: f64,
    pub flip_rate: f64,
    pub neutral_rate: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_size: 2000,
            validation_size: 500,
            positive_rate: 0.11,
            flip_rate: 0.2,
            neutral_rate: 0.3,
            seed: 0,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("positive_rate", self.positive_rate),
            ("flip_rate", self.flip_rate),
            ("neutral_rate", self.neutral_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::invalid(format!("{name} {v} is outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Generates a labeled split of `size` examples named `name`.
pub fn generate_split(name: &str, size: usize, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Result<LabeledCorpus> {
    config.validate()?;
    let positives = (size as f64 * config.positive_rate).round() as usize;
    let mut labels: Vec<bool> = (0..size).map(|i| i < positives).collect();
    labels.shuffle(rng);

    let examples = labels
        .into_iter()
        .enumerate()
        .map(|(i, positive)| {
            let len = rng.gen_range(8..=16);
            let words: Vec<&str> = (0..len)
                .map(|_| {
                    if rng.gen_bool(config.neutral_rate) {
                        NEUTRAL.choose(rng).copied().unwrap()
                    } else {
                        let own_class = !rng.gen_bool(config.flip_rate);
                        let cues = if own_class == positive { POSITIVE_CUES } else { NEGATIVE_CUES };
                        cues.choose(rng).copied().unwrap()
                    }
                })
                .collect();
            LabeledExample::new(
                format!("{name}-{i:05}"),
                words.join(" "),
                ClassLabel::from_bool(positive),
            )
        })
        .collect();
    LabeledCorpus::new(name, examples)
}

/// Train and validation splits drawn from one generator seeded with `config.seed`.
pub fn generate(config: &SynthConfig) -> Result<(LabeledCorpus, LabeledCorpus)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let train = generate_split("train", config.train_size, config, &mut rng)?;
    let validation = generate_split("validation", config.validation_size, config, &mut rng)?;
    Ok((train, validation))
}

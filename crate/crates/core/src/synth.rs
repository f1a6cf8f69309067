//! Synthetic code-mixed corpora whose labels depend only on switching.
//!
//! Surfaces are drawn uniformly from a shared pool regardless of language
//! tag and every utterance has the same length, so no lexical feature
//! carries label information. The label is positive with probability
//! `sigmoid(alpha * (V - mu))` where `V` is the utterance's switch count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, LabeledCorpus, LabeledUtterance, LangTag, Token};
use crate::model::sigmoid;
use crate::switching::switch_counts;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub utterances: usize,
    pub length: usize,
    pub pool_size: usize,
    /// Per-utterance switch probability is drawn from `[0, max_switch_rate)`.
    pub max_switch_rate: f64,
    pub alpha: f64,
    pub mu: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            utterances: 2000,
            length: 12,
            pool_size: 200,
            max_switch_rate: 0.5,
            alpha: 2.0,
            // Expected V: (length - 1) * mean switch rate.
            mu: 11.0 * 0.25,
            seed: 7,
        }
    }
}

/// Generates a corpus named `synthetic`.
pub fn switching_corpus(cfg: &SyntheticConfig) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut utterances = Vec::with_capacity(cfg.utterances);
    for id in 0..cfg.utterances {
        let rate: f64 = rng.gen::<f64>() * cfg.max_switch_rate;
        let mut tag = if rng.gen_bool(0.5) { LangTag::Hi } else { LangTag::En };
        let mut tokens = Vec::with_capacity(cfg.length);
        for pos in 0..cfg.length {
            if pos > 0 && rng.gen_bool(rate) {
                tag = tag.swapped();
            }
            let word = format!("w{:03}", rng.gen_range(0..cfg.pool_size));
            tokens.push(Token::new(word, tag).expect("generated surfaces are valid"));
        }
        let v = f64::from(switch_counts(&tokens).total());
        let label = Label::from_bool(rng.gen_bool(sigmoid(cfg.alpha * (v - cfg.mu))));
        utterances.push(LabeledUtterance::new(id, tokens, label).expect("length >= 1"));
    }
    LabeledCorpus::new("synthetic", utterances).expect("ids are unique")
}

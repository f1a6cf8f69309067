//! Code-switching vectors and the nine per-utterance switching features.
//!
//! For each English token, `hi_en` holds the number of Hindi tokens seen
//! before it; for each Hindi token, `en_hi` holds the number of English
//! tokens seen before it. All other positions are zero. `rest` tokens are
//! invisible to switch counting but count towards the fraction denominators.

use serde::{Deserialize, Serialize};

use crate::corpus::{LangTag, Token};

/// Cumulative opposite-language counts, one entry per token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchVectors {
    pub hi_en: Vec<u32>,
    pub en_hi: Vec<u32>,
}

pub fn lang_run_vectors(tokens: &[Token]) -> SwitchVectors {
    let mut hi_en = Vec::with_capacity(tokens.len());
    let mut en_hi = Vec::with_capacity(tokens.len());
    let (mut hi_seen, mut en_seen) = (0u32, 0u32);
    for token in tokens {
        match token.tag() {
            LangTag::En => {
                hi_en.push(hi_seen);
                en_hi.push(0);
                en_seen += 1;
            }
            LangTag::Hi => {
                hi_en.push(0);
                en_hi.push(en_seen);
                hi_seen += 1;
            }
            LangTag::Rest => {
                hi_en.push(0);
                en_hi.push(0);
            }
        }
    }
    SwitchVectors { hi_en, en_hi }
}

/// Adjacent transition counts in the hi/en projection of an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SwitchCounts {
    pub en_hi: u32,
    pub hi_en: u32,
}

impl SwitchCounts {
    /// Total switches, `V`.
    pub fn total(self) -> u32 {
        self.en_hi + self.hi_en
    }
}

fn projected(tokens: &[Token]) -> impl Iterator<Item = LangTag> + '_ {
    tokens
        .iter()
        .map(Token::tag)
        .filter(|t| matches!(t, LangTag::Hi | LangTag::En))
}

pub fn switch_counts(tokens: &[Token]) -> SwitchCounts {
    let mut counts = SwitchCounts::default();
    let mut prev: Option<LangTag> = None;
    for tag in projected(tokens) {
        match (prev, tag) {
            (Some(LangTag::En), LangTag::Hi) => counts.en_hi += 1,
            (Some(LangTag::Hi), LangTag::En) => counts.hi_en += 1,
            _ => {}
        }
        prev = Some(tag);
    }
    counts
}

/// How "an English word in a Hindi context" is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingRule {
    /// Hindi immediately before and after the English token (hi/en projection).
    #[default]
    Adjacent,
    /// Some Hindi token anywhere before and some anywhere after.
    Anywhere,
}

/// Property Q: some English token sits inside Hindi context.
pub fn has_embedding_property(tokens: &[Token], rule: EmbeddingRule) -> bool {
    let tags: Vec<LangTag> = projected(tokens).collect();
    match rule {
        EmbeddingRule::Adjacent => tags.windows(3).any(|w| w == [LangTag::Hi, LangTag::En, LangTag::Hi]),
        EmbeddingRule::Anywhere => {
            let first_hi = tags.iter().position(|&t| t == LangTag::Hi);
            let last_hi = tags.iter().rposition(|&t| t == LangTag::Hi);
            match (first_hi, last_hi) {
                (Some(a), Some(b)) => tags[a..b].contains(&LangTag::En),
                _ => false,
            }
        }
    }
}

pub const FEATURE_NAMES: [&str; 9] = [
    "en_hi_switches",
    "hi_en_switches",
    "v",
    "fraction_en",
    "fraction_hi",
    "mean_hi_en",
    "stddev_hi_en",
    "mean_en_hi",
    "stddev_en_hi",
];

/// The nine switching features of one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SwitchProfile {
    pub en_hi_switches: u32,
    pub hi_en_switches: u32,
    pub v: u32,
    pub fraction_en: f64,
    pub fraction_hi: f64,
    pub mean_hi_en: f64,
    pub stddev_hi_en: f64,
    pub mean_en_hi: f64,
    pub stddev_en_hi: f64,
}

impl SwitchProfile {
    /// Feature values in the order of [`FEATURE_NAMES`].
    pub fn to_array(&self) -> [f64; 9] {
        [
            f64::from(self.en_hi_switches),
            f64::from(self.hi_en_switches),
            f64::from(self.v),
            self.fraction_en,
            self.fraction_hi,
            self.mean_hi_en,
            self.stddev_hi_en,
            self.mean_en_hi,
            self.stddev_en_hi,
        ]
    }
}

/// Mean and population standard deviation.
fn moments(values: &[u32]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let var = values
        .iter()
        .map(|&v| {
            let d = f64::from(v) - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    (mean, var.sqrt())
}

/// Computes the nine features. Moments run over the full-length vectors,
/// zeros included. An empty token slice gives the all-zero profile.
pub fn switching_features(tokens: &[Token]) -> SwitchProfile {
    if tokens.is_empty() {
        return SwitchProfile::default();
    }
    let counts = switch_counts(tokens);
    let vectors = lang_run_vectors(tokens);
    let n = tokens.len() as f64;
    let n_en = tokens.iter().filter(|t| t.tag() == LangTag::En).count() as f64;
    let n_hi = tokens.iter().filter(|t| t.tag() == LangTag::Hi).count() as f64;
    let (mean_hi_en, stddev_hi_en) = moments(&vectors.hi_en);
    let (mean_en_hi, stddev_en_hi) = moments(&vectors.en_hi);
    SwitchProfile {
        en_hi_switches: counts.en_hi,
        hi_en_switches: counts.hi_en,
        v: counts.total(),
        fraction_en: n_en / n,
        fraction_hi: n_hi / n,
        mean_hi_en,
        stddev_hi_en,
        mean_en_hi,
        stddev_en_hi,
    }
}

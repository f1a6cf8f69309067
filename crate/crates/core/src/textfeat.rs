//! Lexical feature space: character and word n-grams, bag-of-words,
//! chi-squared selection, indicative-token lexicons and negation counts.
//!
//! A vectorized utterance is laid out as
//! `[vocabulary features | indicative sum | negation count | 9 switching features?]`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{LabeledCorpus, Token};
use crate::sparse::SparseVector;
use crate::switching::switching_features;

/// Joins the words of a word n-gram.
pub const WORD_SEPARATOR: char = '§';

/// Number of special dimensions following the vocabulary.
pub const SPECIAL_DIMS: usize = 2;
pub const SWITCHING_DIMS: usize = 9;

pub const DEFAULT_CHI2_K: usize = 500;

const DEFAULT_NEGATION_WORDS: &str = include_str!("../data/negation_words.txt");

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("n-gram order must be at least 1")]
    BadOrder,
    #[error("vocabulary is empty (no feature reached min_count {0})")]
    EmptyVocabulary(usize),
    #[error("selection size k must be at least 1")]
    BadSelectionSize,
    #[error("line {line}: bad lexicon entry {entry:?}")]
    BadLexiconLine { line: usize, entry: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    CharNgram,
    WordNgram,
    Bow,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::CharNgram => "char_ngram",
            FeatureKind::WordNgram => "word_ngram",
            FeatureKind::Bow => "bow",
        }
    }
}

impl std::str::FromStr for FeatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char_ngram" | "char" => Ok(FeatureKind::CharNgram),
            "word_ngram" | "word" => Ok(FeatureKind::WordNgram),
            "bow" => Ok(FeatureKind::Bow),
            other => Err(format!("unknown feature kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureKey {
    pub kind: FeatureKind,
    pub text: String,
}

impl FeatureKey {
    pub fn new(kind: FeatureKind, text: impl Into<String>) -> Self {
        FeatureKey {
            kind,
            text: text.into(),
        }
    }
}

/// Which lexical features to extract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub kinds: BTreeSet<FeatureKind>,
    pub char_n: Vec<usize>,
    pub word_n: Vec<usize>,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            kinds: [FeatureKind::CharNgram, FeatureKind::WordNgram].into_iter().collect(),
            char_n: vec![3],
            word_n: vec![1, 2],
        }
    }
}

impl FeatureSpec {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if self.char_n.contains(&0) || self.word_n.contains(&0) {
            return Err(FeatureError::BadOrder);
        }
        Ok(())
    }

    /// Feature occurrence counts of one utterance.
    pub fn extract(&self, tokens: &[Token]) -> BTreeMap<FeatureKey, u32> {
        let mut counts = BTreeMap::new();
        let mut bump = |key: FeatureKey| *counts.entry(key).or_insert(0) += 1;
        if self.kinds.contains(&FeatureKind::CharNgram) {
            let text = joined_text(tokens);
            for &n in &self.char_n {
                for gram in char_ngrams_unchecked(&text, n) {
                    bump(FeatureKey::new(FeatureKind::CharNgram, gram));
                }
            }
        }
        if self.kinds.contains(&FeatureKind::WordNgram) {
            for &n in &self.word_n {
                for gram in word_ngrams_unchecked(tokens, n) {
                    bump(FeatureKey::new(FeatureKind::WordNgram, gram));
                }
            }
        }
        if self.kinds.contains(&FeatureKind::Bow) {
            for t in tokens {
                bump(FeatureKey::new(FeatureKind::Bow, t.surface().to_lowercase()));
            }
        }
        counts
    }
}

fn joined_text(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface().to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

fn char_ngrams_unchecked(text: &str, n: usize) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    if chars.len() < n {
        return Vec::new();
    }
    chars.windows(n).map(|w| w.iter().collect()).collect()
}

fn word_ngrams_unchecked(tokens: &[Token], n: usize) -> Vec<String> {
    if tokens.len() < n {
        return Vec::new();
    }
    let words: Vec<String> = tokens.iter().map(|t| t.surface().to_lowercase()).collect();
    words.windows(n).map(|w| w.join(&WORD_SEPARATOR.to_string())).collect()
}

/// All length-`n` character windows of the lowercased text, in order.
pub fn char_ngrams(text: &str, n: usize) -> Result<Vec<String>, FeatureError> {
    if n == 0 {
        return Err(FeatureError::BadOrder);
    }
    Ok(char_ngrams_unchecked(&text.to_lowercase(), n))
}

/// Word n-grams over lowercased surfaces joined by [`WORD_SEPARATOR`].
pub fn word_ngrams(tokens: &[Token], n: usize) -> Result<Vec<String>, FeatureError> {
    if n == 0 {
        return Err(FeatureError::BadOrder);
    }
    Ok(word_ngrams_unchecked(tokens, n))
}

/// Dense feature index, sorted by kind then text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    spec: FeatureSpec,
    keys: Vec<FeatureKey>,
    index: HashMap<FeatureKey, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    spec: FeatureSpec,
    keys: Vec<FeatureKey>,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        Vocabulary::from_keys(r.spec, r.keys)
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            spec: v.spec,
            keys: v.keys,
        }
    }
}

impl Vocabulary {
    /// Sorts and deduplicates `keys`.
    pub fn from_keys(spec: FeatureSpec, keys: impl IntoIterator<Item = FeatureKey>) -> Self {
        let keys: Vec<FeatureKey> = keys.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        Vocabulary { spec, keys, index }
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[FeatureKey] {
        &self.keys
    }

    pub fn index_of(&self, key: &FeatureKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    /// Keeps the keys for which `keep` holds and re-indexes.
    pub fn retain(&self, mut keep: impl FnMut(&FeatureKey) -> bool) -> Vocabulary {
        Vocabulary::from_keys(self.spec.clone(), self.keys.iter().filter(|k| keep(k)).cloned())
    }

    /// Vocabulary indices present in an utterance, with their counts.
    pub fn project(&self, tokens: &[Token]) -> Vec<(usize, f64)> {
        self.spec
            .extract(tokens)
            .into_iter()
            .filter_map(|(key, count)| self.index_of(&key).map(|i| (i, f64::from(count))))
            .collect()
    }
}

/// All features of the requested kinds occurring at least `min_count`
/// times in the corpus.
pub fn build_vocabulary(
    corpus: &LabeledCorpus,
    spec: &FeatureSpec,
    min_count: u32,
) -> Result<Vocabulary, FeatureError> {
    spec.validate()?;
    let mut totals: HashMap<FeatureKey, u32> = HashMap::new();
    for u in corpus {
        for (key, count) in spec.extract(u.tokens()) {
            *totals.entry(key).or_insert(0) += count;
        }
    }
    let vocab = Vocabulary::from_keys(
        spec.clone(),
        totals.into_iter().filter(|(_, c)| *c >= min_count).map(|(k, _)| k),
    );
    if vocab.is_empty() {
        return Err(FeatureError::EmptyVocabulary(min_count as usize));
    }
    Ok(vocab)
}

/// Chi-squared statistic of a 2x2 table: `a` present & positive,
/// `b` present & negative, `c` absent & positive, `d` absent & negative.
/// Zero when any marginal is empty.
pub fn chi2_statistic(a: u64, b: u64, c: u64, d: u64) -> f64 {
    let [a, b, c, d] = [a, b, c, d].map(|x| x as f64);
    let denom = (a + b) * (c + d) * (a + c) * (b + d);
    if denom == 0.0 {
        return 0.0;
    }
    let n = a + b + c + d;
    let cross = a * d - b * c;
    n * cross * cross / denom
}

/// Presence/label chi-squared score for every vocabulary feature.
pub fn chi2_scores(corpus: &LabeledCorpus, vocab: &Vocabulary) -> Vec<f64> {
    let mut present_pos = vec![0u64; vocab.len()];
    let mut present_neg = vec![0u64; vocab.len()];
    let (mut pos, mut neg) = (0u64, 0u64);
    for u in corpus {
        let cell = if u.label().is_positive() {
            pos += 1;
            &mut present_pos
        } else {
            neg += 1;
            &mut present_neg
        };
        for (i, _) in vocab.project(u.tokens()) {
            cell[i] += 1;
        }
    }
    present_pos
        .iter()
        .zip(&present_neg)
        .map(|(&a, &b)| chi2_statistic(a, b, pos - a, neg - b))
        .collect()
}

/// Chi-squared score of a single feature; zero if it is not in the vocabulary.
pub fn chi2_score(key: &FeatureKey, corpus: &LabeledCorpus, vocab: &Vocabulary) -> f64 {
    vocab.index_of(key).map_or(0.0, |i| chi2_scores(corpus, vocab)[i])
}

/// The `k` highest-scoring features, ties broken by key order.
pub fn chi2_select(corpus: &LabeledCorpus, vocab: &Vocabulary, k: usize) -> Result<Vocabulary, FeatureError> {
    chi2_select_kinds(corpus, vocab, k, None)
}

/// Like [`chi2_select`], but only features whose kind is in `kinds` compete
/// for the `k` slots; every other feature is kept. `None` means all kinds.
pub fn chi2_select_kinds(
    corpus: &LabeledCorpus,
    vocab: &Vocabulary,
    k: usize,
    kinds: Option<&BTreeSet<FeatureKind>>,
) -> Result<Vocabulary, FeatureError> {
    if k == 0 {
        return Err(FeatureError::BadSelectionSize);
    }
    let in_scope = |key: &FeatureKey| kinds.is_none_or(|ks| ks.contains(&key.kind));
    let candidates: Vec<usize> = (0..vocab.len()).filter(|&i| in_scope(&vocab.keys[i])).collect();
    if k >= candidates.len() {
        if k > candidates.len() {
            warn!(
                "chi-squared k = {k} exceeds the {} candidate features; keeping all",
                candidates.len()
            );
        }
        return Ok(vocab.clone());
    }
    let scores = chi2_scores(corpus, vocab);
    let mut ranked = candidates;
    // Indices follow key order, so a stable sort on score breaks ties by key.
    ranked.sort_by(|&x, &y| scores[y].total_cmp(&scores[x]));
    let chosen: BTreeSet<usize> = ranked.into_iter().take(k).collect();
    Ok(Vocabulary::from_keys(
        vocab.spec.clone(),
        vocab
            .keys
            .iter()
            .enumerate()
            .filter(|(i, key)| chosen.contains(i) || !in_scope(key))
            .map(|(_, key)| key.clone()),
    ))
}

/// Per-token association with the positive class.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicativeLexicon {
    pub class_name: String,
    pub scores: BTreeMap<String, f64>,
}

/// Smoothed log-ratio `ln((pos + 1) / (neg + 1))` of lowercased token
/// occurrences. Tokens scoring zero or with `|score| < floor` are dropped.
pub fn indicative_scores(corpus: &LabeledCorpus, floor: f64) -> IndicativeLexicon {
    let mut counts: BTreeMap<String, (u64, u64)> = BTreeMap::new();
    for u in corpus {
        let positive = u.label().is_positive();
        for t in u.tokens() {
            let entry = counts.entry(t.surface().to_lowercase()).or_default();
            if positive {
                entry.0 += 1;
            } else {
                entry.1 += 1;
            }
        }
    }
    let scores = counts
        .into_iter()
        .map(|(tok, (p, n))| (tok, ((p + 1) as f64 / (n + 1) as f64).ln()))
        .filter(|(_, s)| *s != 0.0 && s.abs() >= floor)
        .collect();
    IndicativeLexicon {
        class_name: corpus.task_name.clone(),
        scores,
    }
}

impl IndicativeLexicon {
    pub fn score(&self, token: &str) -> f64 {
        self.scores.get(&token.to_lowercase()).copied().unwrap_or(0.0)
    }

    /// Reads `token<TAB>score` lines; a bare token scores 1. Blank lines and
    /// `#` comments are skipped.
    pub fn read(source: impl BufRead, class_name: &str) -> Result<Self, FeatureError> {
        let mut scores = BTreeMap::new();
        for (idx, line) in source.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = || FeatureError::BadLexiconLine {
                line: idx + 1,
                entry: line.to_string(),
            };
            let (token, score) = match line.split_once('\t') {
                Some((tok, s)) => (tok.trim(), s.trim().parse::<f64>().map_err(|_| bad())?),
                None => (line, 1.0),
            };
            if token.is_empty() || !score.is_finite() {
                return Err(bad());
            }
            scores.insert(token.to_lowercase(), score);
        }
        Ok(IndicativeLexicon {
            class_name: class_name.to_string(),
            scores,
        })
    }

    pub fn write_to(&self, mut sink: impl Write) -> std::io::Result<()> {
        for (tok, score) in &self.scores {
            writeln!(sink, "{tok}\t{score}")?;
        }
        Ok(())
    }
}

/// Negation cue words. Tokens ending in `n't` always count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NegationWords(BTreeSet<String>);

impl Default for NegationWords {
    fn default() -> Self {
        NegationWords::read(DEFAULT_NEGATION_WORDS.as_bytes()).expect("bundled list parses")
    }
}

impl NegationWords {
    pub fn new(words: impl IntoIterator<Item = String>) -> Self {
        NegationWords(words.into_iter().map(|w| w.to_lowercase()).collect())
    }

    /// One word per line (anything after a TAB is ignored); `#` comments skipped.
    pub fn read(source: impl BufRead) -> Result<Self, FeatureError> {
        let mut words = BTreeSet::new();
        for line in source.lines() {
            let line = line?;
            let word = line.split('\t').next().unwrap_or("").trim();
            if !word.is_empty() && !word.starts_with('#') {
                words.insert(word.to_lowercase());
            }
        }
        Ok(NegationWords(words))
    }

    pub fn contains(&self, word: &str) -> bool {
        let lower = word.to_lowercase();
        lower.ends_with("n't") || self.0.contains(&lower)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Total dimension of vectors produced by [`vectorize`].
pub fn vector_dim(vocab: &Vocabulary, with_switching: bool) -> usize {
    vocab.len() + SPECIAL_DIMS + if with_switching { SWITCHING_DIMS } else { 0 }
}

/// Encodes one utterance: vocabulary counts, the summed indicative score,
/// the negation count and, optionally, the nine switching features.
pub fn vectorize(
    tokens: &[Token],
    vocab: &Vocabulary,
    lexicons: &[IndicativeLexicon],
    negation: &NegationWords,
    with_switching: bool,
) -> SparseVector {
    let base = vocab.len();
    let mut pairs = vocab.project(tokens);
    let indicative: f64 = tokens
        .iter()
        .map(|t| lexicons.iter().map(|lex| lex.score(t.surface())).sum::<f64>())
        .sum();
    let negations = tokens.iter().filter(|t| negation.contains(t.surface())).count() as f64;
    pairs.push((base, indicative));
    pairs.push((base + 1, negations));
    let head = SparseVector::from_pairs(base + SPECIAL_DIMS, pairs);
    if with_switching {
        head.concat(&switching_features(tokens).to_array())
    } else {
        head
    }
}

//! Language-tagged code-mixed corpora.
//!
//! The on-disk format is one utterance per line:
//!
//! ```text
//! 1<TAB>koi_hi to_hi pray_en karo_hi mere_hi liye_hi bhi_hi
//! ```
//!
//! The label (`0` or `1`) comes first, then space-separated tokens. The last
//! underscore of each token separates the surface form from its language tag
//! (`hi`, `en` or `rest`), so surfaces may themselves contain underscores.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Per-word language label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LangTag {
    Hi,
    En,
    /// Anything that is neither Hindi nor English: emoticons, placeholders, numbers.
    Rest,
}

impl LangTag {
    pub fn as_str(self) -> &'static str {
        match self {
            LangTag::Hi => "hi",
            LangTag::En => "en",
            LangTag::Rest => "rest",
        }
    }

    /// Hindi <-> English; `rest` maps to itself.
    pub fn swapped(self) -> LangTag {
        match self {
            LangTag::Hi => LangTag::En,
            LangTag::En => LangTag::Hi,
            LangTag::Rest => LangTag::Rest,
        }
    }
}

impl fmt::Display for LangTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LangTag {
    type Err = ParseErrorKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hi" => Ok(LangTag::Hi),
            "en" => Ok(LangTag::En),
            "rest" => Ok(LangTag::Rest),
            other => Err(ParseErrorKind::UnknownTag(other.to_string())),
        }
    }
}

/// A surface word with its language tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Token {
    surface: String,
    tag: LangTag,
}

impl Token {
    /// Builds a token, rejecting empty surfaces and surfaces containing whitespace.
    pub fn new(surface: impl Into<String>, tag: LangTag) -> Result<Self, ParseErrorKind> {
        let surface = surface.into();
        if surface.is_empty() {
            return Err(ParseErrorKind::EmptySurface);
        }
        if surface.chars().any(char::is_whitespace) {
            return Err(ParseErrorKind::WhitespaceInSurface(surface));
        }
        Ok(Token { surface, tag })
    }

    pub fn surface(&self) -> &str {
        &self.surface
    }

    pub fn tag(&self) -> LangTag {
        self.tag
    }

    pub fn with_tag(&self, tag: LangTag) -> Token {
        Token {
            surface: self.surface.clone(),
            tag,
        }
    }

    /// Parses `surface_tag`, splitting at the last underscore.
    pub fn parse(raw: &str) -> Result<Self, ParseErrorKind> {
        let (surface, tag) = raw
            .rsplit_once('_')
            .ok_or_else(|| ParseErrorKind::MissingTag(raw.to_string()))?;
        let tag = tag.parse::<LangTag>()?;
        Token::new(surface, tag)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.surface, self.tag)
    }
}

/// Binary task label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }

    pub fn from_bool(positive: bool) -> Label {
        if positive {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn flipped(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    /// `1` for positive, `0` for negative.
    pub fn as_digit(self) -> u8 {
        match self {
            Label::Positive => 1,
            Label::Negative => 0,
        }
    }
}

/// One tagged utterance (a tweet) with its task label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledUtterance {
    pub id: usize,
    tokens: Vec<Token>,
    label: Label,
}

impl LabeledUtterance {
    pub fn new(id: usize, tokens: Vec<Token>, label: Label) -> Result<Self, ParseErrorKind> {
        if tokens.is_empty() {
            return Err(ParseErrorKind::EmptyTokenList);
        }
        Ok(LabeledUtterance { id, tokens, label })
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn label(&self) -> Label {
        self.label
    }

    /// Same id and label, different tokens. Used by the preprocessing stage.
    pub fn with_tokens(&self, tokens: Vec<Token>) -> Result<Self, ParseErrorKind> {
        LabeledUtterance::new(self.id, tokens, self.label)
    }

    /// Serializes back to the tagged-line format (without a trailing newline).
    pub fn to_tagged_line(&self) -> String {
        let mut line = String::new();
        line.push(char::from(b'0' + self.label.as_digit()));
        line.push('\t');
        for (i, token) in self.tokens.iter().enumerate() {
            if i > 0 {
                line.push(' ');
            }
            line.push_str(&token.to_string());
        }
        line
    }
}

/// Why a single line failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing TAB between label and tokens")]
    MissingTab,
    #[error("malformed label {0:?} (expected 0 or 1)")]
    MalformedLabel(String),
    #[error("empty token list")]
    EmptyTokenList,
    #[error("token {0:?} has no _tag suffix")]
    MissingTag(String),
    #[error("unknown language tag {0:?}")]
    UnknownTag(String),
    #[error("empty surface form")]
    EmptySurface,
    #[error("surface {0:?} contains whitespace")]
    WhitespaceInSurface(String),
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {kind}{}", token.as_ref().map(|t| format!(" (token {t:?})")).unwrap_or_default())]
    Parse {
        line: usize,
        token: Option<String>,
        kind: ParseErrorKind,
    },
    #[error("empty corpus")]
    Empty,
    #[error("duplicate utterance id {0}")]
    DuplicateId(usize),
    #[error("train fraction {0} must lie strictly between 0 and 1")]
    BadTrainFraction(f64),
    #[error("fold count {k} out of range for a corpus of {n} utterances (need 2 <= k <= n)")]
    BadFoldCount { k: usize, n: usize },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses one tagged line. `line_no` is 1-based and only used in errors;
/// the returned utterance gets id `line_no - 1`.
pub fn parse_tagged_line(line: &str, line_no: usize) -> Result<LabeledUtterance, CorpusError> {
    let err = |token: Option<&str>, kind| CorpusError::Parse {
        line: line_no,
        token: token.map(str::to_string),
        kind,
    };
    let line = line.strip_suffix('\r').unwrap_or(line);
    let (label, rest) = line
        .split_once('\t')
        .ok_or_else(|| err(None, ParseErrorKind::MissingTab))?;
    let label = match label.trim() {
        "1" => Label::Positive,
        "0" => Label::Negative,
        other => return Err(err(None, ParseErrorKind::MalformedLabel(other.to_string()))),
    };
    let tokens = rest
        .split_whitespace()
        .map(|raw| Token::parse(raw).map_err(|kind| err(Some(raw), kind)))
        .collect::<Result<Vec<_>, _>>()?;
    LabeledUtterance::new(line_no.saturating_sub(1), tokens, label).map_err(|kind| err(None, kind))
}

/// An ordered collection of utterances for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub task_name: String,
    utterances: Vec<LabeledUtterance>,
}

impl LabeledCorpus {
    /// Fails if two utterances share an id.
    pub fn new(task_name: impl Into<String>, utterances: Vec<LabeledUtterance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(utterances.len());
        for u in &utterances {
            if !seen.insert(u.id) {
                return Err(CorpusError::DuplicateId(u.id));
            }
        }
        Ok(LabeledCorpus {
            task_name: task_name.into(),
            utterances,
        })
    }

    pub fn utterances(&self) -> &[LabeledUtterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, LabeledUtterance> {
        self.utterances.iter()
    }

    pub fn positives(&self) -> usize {
        self.utterances.iter().filter(|u| u.label.is_positive()).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }

    pub fn has_both_classes(&self) -> bool {
        let pos = self.positives();
        pos > 0 && pos < self.len()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.utterances.iter().map(|u| u.label).collect()
    }

    /// Keeps utterances for which `keep` holds, preserving order and ids.
    pub fn filtered(&self, mut keep: impl FnMut(&LabeledUtterance) -> bool) -> LabeledCorpus {
        LabeledCorpus {
            task_name: self.task_name.clone(),
            utterances: self.utterances.iter().filter(|u| keep(u)).cloned().collect(),
        }
    }

    /// Applies `f` to every utterance, keeping order, ids and task name.
    pub fn try_map<E>(
        &self,
        f: impl FnMut(&LabeledUtterance) -> Result<LabeledUtterance, E>,
    ) -> Result<LabeledCorpus, E> {
        Ok(LabeledCorpus {
            task_name: self.task_name.clone(),
            utterances: self.utterances.iter().map(f).collect::<Result<_, _>>()?,
        })
    }

    /// Sub-corpus of the utterances at `indices`, in ascending index order.
    fn subset(&self, indices: &[usize]) -> LabeledCorpus {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        LabeledCorpus {
            task_name: self.task_name.clone(),
            utterances: sorted.into_iter().map(|i| self.utterances[i].clone()).collect(),
        }
    }

    /// Writes the corpus in the tagged-line format, one utterance per line.
    pub fn write_to(&self, mut sink: impl std::io::Write) -> std::io::Result<()> {
        for u in &self.utterances {
            writeln!(sink, "{}", u.to_tagged_line())?;
        }
        Ok(())
    }
}

impl<'a> IntoIterator for &'a LabeledCorpus {
    type Item = &'a LabeledUtterance;
    type IntoIter = std::slice::Iter<'a, LabeledUtterance>;

    fn into_iter(self) -> Self::IntoIter {
        self.utterances.iter()
    }
}

/// Reads a tagged-line stream. Blank lines are skipped; ids are the 0-based
/// ordinals of the non-blank lines, errors cite physical 1-based line numbers.
pub fn load_corpus(source: impl BufRead, task_name: &str) -> Result<LabeledCorpus, CorpusError> {
    let mut utterances = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut u = parse_tagged_line(&line, idx + 1)?;
        u.id = utterances.len();
        utterances.push(u);
    }
    if utterances.is_empty() {
        return Err(CorpusError::Empty);
    }
    LabeledCorpus::new(task_name, utterances)
}

fn shuffled_indices(n: usize, seed: u64) -> Vec<usize> {
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    indices
}

/// Uniform random train/test split. The train side gets
/// `floor(train_fraction * N)` utterances; both sides keep corpus order.
pub fn split_train_test(
    corpus: &LabeledCorpus,
    train_fraction: f64,
    seed: u64,
) -> Result<(LabeledCorpus, LabeledCorpus), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadTrainFraction(train_fraction));
    }
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let indices = shuffled_indices(corpus.len(), seed);
    let n_train = (train_fraction * corpus.len() as f64).floor() as usize;
    let (train, test) = indices.split_at(n_train);
    Ok((corpus.subset(train), corpus.subset(test)))
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: LabeledCorpus,
    pub test: LabeledCorpus,
}

/// Shuffles once, then cuts the permutation into `k` contiguous test folds
/// whose sizes differ by at most one (the first `N mod k` folds are larger).
pub fn kfold(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    let n = corpus.len();
    if k < 2 || k > n {
        return Err(CorpusError::BadFoldCount { k, n });
    }
    let indices = shuffled_indices(n, seed);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        let end = start + size;
        let test = &indices[start..end];
        let train: Vec<usize> = indices[..start].iter().chain(&indices[end..]).copied().collect();
        folds.push(Fold {
            train: corpus.subset(&train),
            test: corpus.subset(test),
        });
        start = end;
    }
    Ok(folds)
}

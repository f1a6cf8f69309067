//! Tweet normalization: punctuation removal, placeholders for hashtags,
//! mentions and URLs, and camel-case hashtag segmentation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, LabeledUtterance, LangTag, ParseErrorKind, Token};

pub const HASHTAG_PLACEHOLDER: &str = "hashtag";
pub const MENTION_PLACEHOLDER: &str = "mention";
pub const URL_PLACEHOLDER: &str = "url";

/// ASCII punctuation plus common typographic quotes, dashes and the danda.
pub const DEFAULT_PUNCTUATION: &str = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~“”‘’«»…–—¡¿।";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Emit a `hashtag` placeholder token for every hashtag.
    pub keep_hashtag_placeholder: bool,
    /// Split hashtag bodies at camel-case boundaries. When off the body is
    /// kept as a single lowercased word.
    pub segment_hashtags: bool,
    pub punctuation: BTreeSet<char>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            keep_hashtag_placeholder: true,
            segment_hashtags: true,
            punctuation: DEFAULT_PUNCTUATION.chars().collect(),
        }
    }
}

impl PreprocessConfig {
    pub fn with_punctuation(mut self, chars: &str) -> Self {
        self.punctuation = chars.chars().collect();
        self
    }

    fn is_punct(&self, c: char) -> bool {
        self.punctuation.contains(&c)
    }

    fn all_punct(&self, s: &str) -> bool {
        s.chars().all(|c| self.is_punct(c))
    }

    fn strip_edges<'a>(&self, s: &'a str) -> &'a str {
        s.trim_matches(|c| self.is_punct(c))
    }
}

/// Splits at every lowercase-to-uppercase boundary. The pieces concatenate
/// back to the input.
pub fn segment_camel_case(word: &str) -> Vec<String> {
    let mut parts = Vec::new();
    let mut current = String::new();
    let mut prev_lower = false;
    for c in word.chars() {
        if prev_lower && c.is_uppercase() && !current.is_empty() {
            parts.push(std::mem::take(&mut current));
        }
        current.push(c);
        prev_lower = c.is_lowercase();
    }
    if !current.is_empty() {
        parts.push(current);
    }
    parts
}

fn is_url(s: &str) -> bool {
    let lower = s.to_lowercase();
    ["http://", "https://", "www."]
        .iter()
        .any(|scheme| lower.starts_with(scheme) && lower.len() > scheme.len())
}

fn placeholder(name: &str) -> Token {
    Token::new(name, LangTag::Rest).expect("placeholders are valid surfaces")
}

fn push_word(out: &mut Vec<Token>, surface: &str, tag: LangTag) {
    if let Ok(token) = Token::new(surface, tag) {
        out.push(token);
    }
}

fn normalize_one(surface: &str, tag: LangTag, cfg: &PreprocessConfig, out: &mut Vec<Token>) {
    // Leading '#' and '@' survive this trim so that "(@user" is still a mention.
    let lead = surface.trim_start_matches(|c| cfg.is_punct(c) && c != '#' && c != '@');
    if is_url(lead) {
        out.push(placeholder(URL_PLACEHOLDER));
        return;
    }
    if let Some(body) = lead.strip_prefix('@') {
        if !cfg.all_punct(body) {
            out.push(placeholder(MENTION_PLACEHOLDER));
            return;
        }
    }
    if let Some(body) = lead.strip_prefix('#') {
        let body = body.trim_matches(|c| cfg.is_punct(c) || c == '#' || c == '@');
        if !body.is_empty() {
            if cfg.keep_hashtag_placeholder {
                out.push(placeholder(HASHTAG_PLACEHOLDER));
            }
            let pieces = if cfg.segment_hashtags {
                segment_camel_case(body)
            } else {
                vec![body.to_string()]
            };
            for piece in pieces {
                // Pieces go back through the word rules so that a segment like
                // "www.x" ends up exactly where a second pass would put it.
                let piece = piece.to_lowercase();
                let piece = piece.trim_matches(|c| cfg.is_punct(c) || c == '#' || c == '@');
                if !piece.is_empty() {
                    normalize_one(piece, tag, cfg, out);
                }
            }
            return;
        }
    }
    if surface.is_empty() || cfg.all_punct(surface) {
        return;
    }
    match tag {
        // Emoticons such as ":P" are kept whole.
        LangTag::Rest => push_word(out, surface, tag),
        LangTag::Hi | LangTag::En => push_word(out, cfg.strip_edges(surface), tag),
    }
}

/// Normalizes a raw `(surface, tag)` sequence. May return an empty vector
/// when every token was punctuation.
pub fn normalize<S: AsRef<str>>(raw_tokens: &[(S, LangTag)], cfg: &PreprocessConfig) -> Vec<Token> {
    let mut out = Vec::with_capacity(raw_tokens.len());
    for (surface, tag) in raw_tokens {
        normalize_one(surface.as_ref(), *tag, cfg, &mut out);
    }
    out
}

pub fn normalize_tokens(tokens: &[Token], cfg: &PreprocessConfig) -> Vec<Token> {
    let mut out = Vec::with_capacity(tokens.len());
    for t in tokens {
        normalize_one(t.surface(), t.tag(), cfg, &mut out);
    }
    out
}

/// Normalizes every utterance of a corpus. Utterances reduced to zero
/// tokens are an error naming the utterance id.
pub fn normalize_corpus(corpus: &LabeledCorpus, cfg: &PreprocessConfig) -> Result<LabeledCorpus, EmptiedUtterance> {
    corpus.try_map(|u: &LabeledUtterance| {
        u.with_tokens(normalize_tokens(u.tokens(), cfg))
            .map_err(|_: ParseErrorKind| EmptiedUtterance { id: u.id })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("utterance {id} has no tokens left after preprocessing")]
pub struct EmptiedUtterance {
    pub id: usize,
}

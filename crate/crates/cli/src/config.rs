//! Run configuration: command-line flags layered over an optional TOML file.
//!
//! Precedence is flag > config file > built-in default. The file path comes
//! from `--config` or the `CODEMIX_CONFIG` environment variable.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use codemix::model::DEFAULT_TAU;
use codemix::preprocess::PreprocessConfig;
use codemix::switching::EmbeddingRule;
use codemix::textfeat::{FeatureKind, IndicativeLexicon, NegationWords};
use codemix::PipelineConfig;
use serde::Deserialize;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleArg {
    Adjacent,
    Anywhere,
}

impl From<RuleArg> for EmbeddingRule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Adjacent => EmbeddingRule::Adjacent,
            RuleArg::Anywhere => EmbeddingRule::Anywhere,
        }
    }
}

/// Keys accepted in the TOML config file. All optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub tau: Option<f64>,
    pub format: Option<Format>,
    pub preprocess: Option<bool>,
    pub segment_hashtags: Option<bool>,
    pub hashtag_placeholder: Option<bool>,
    pub punct: Option<String>,
    pub embedding_rule: Option<RuleArg>,
    pub kinds: Option<Vec<String>>,
    pub char_n: Option<Vec<usize>>,
    pub word_n: Option<Vec<usize>>,
    pub min_count: Option<u32>,
    pub chi2_k: Option<usize>,
    pub chi2_kinds: Option<Vec<String>>,
    pub with_switching: Option<bool>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub l2: Option<f64>,
    pub negation_words: Option<PathBuf>,
    pub lexicons: Option<Vec<PathBuf>>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Seed for every random choice (splits, folds, cross-fitting).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output format.
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,
    /// Skip normalization and use tokens exactly as tagged.
    #[arg(long, global = true)]
    pub no_preprocess: bool,
    /// Do not split hashtags at camel-case boundaries.
    #[arg(long, global = true)]
    pub no_segment_hashtags: bool,
    /// Do not emit the `hashtag` placeholder token.
    #[arg(long, global = true)]
    pub no_hashtag_placeholder: bool,
    /// Punctuation characters to strip.
    #[arg(long, global = true, value_name = "CHARS")]
    pub punct: Option<String>,
    /// How "English inside Hindi context" is read for property Q.
    #[arg(long, value_enum, global = true)]
    pub embedding_rule: Option<RuleArg>,
}

/// Flags for the classifier pipeline.
#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Feature kinds: char_ngram, word_ngram, bow (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Character n-gram orders.
    #[arg(long, value_delimiter = ',')]
    pub char_n: Option<Vec<usize>>,
    /// Word n-gram orders.
    #[arg(long, value_delimiter = ',')]
    pub word_n: Option<Vec<usize>>,
    #[arg(long)]
    pub min_count: Option<u32>,
    /// Chi-squared selection size.
    #[arg(long)]
    pub chi2_k: Option<usize>,
    /// Disable chi-squared selection.
    #[arg(long)]
    pub no_chi2: bool,
    /// Kinds that compete in chi-squared selection (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub chi2_kinds: Option<Vec<String>>,
    /// Leave out the nine switching features.
    #[arg(long)]
    pub no_switching: bool,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Negation word list, one word per line.
    #[arg(long, value_name = "FILE")]
    pub negation_words: Option<PathBuf>,
    /// Fixed indicative lexicon (`token<TAB>score` lines); repeatable.
    #[arg(long = "lexicon", value_name = "FILE")]
    pub lexicons: Vec<PathBuf>,
}

pub fn seed(common: &CommonArgs, file: &FileConfig) -> u64 {
    common.seed.or(file.seed).unwrap_or(DEFAULT_SEED)
}

pub fn format(common: &CommonArgs, file: &FileConfig, default: Format) -> Format {
    common.format.or(file.format).unwrap_or(default)
}

pub fn embedding_rule(common: &CommonArgs, file: &FileConfig) -> EmbeddingRule {
    common
        .embedding_rule
        .or(file.embedding_rule)
        .map_or(EmbeddingRule::default(), Into::into)
}

pub fn tau(flag: Option<f64>, file: &FileConfig) -> f64 {
    flag.or(file.tau).unwrap_or(DEFAULT_TAU)
}

pub fn folds(flag: Option<usize>, file: &FileConfig) -> usize {
    flag.or(file.k).unwrap_or(DEFAULT_FOLDS)
}

/// `None` when preprocessing is switched off.
pub fn preprocess(common: &CommonArgs, file: &FileConfig) -> Option<PreprocessConfig> {
    if common.no_preprocess || file.preprocess == Some(false) {
        return None;
    }
    let mut cfg = PreprocessConfig::default();
    if common.no_segment_hashtags || file.segment_hashtags == Some(false) {
        cfg.segment_hashtags = false;
    }
    if common.no_hashtag_placeholder || file.hashtag_placeholder == Some(false) {
        cfg.keep_hashtag_placeholder = false;
    }
    if let Some(p) = common.punct.as_ref().or(file.punct.as_ref()) {
        cfg = cfg.with_punctuation(p);
    }
    Some(cfg)
}

fn parse_kinds(raw: &[String]) -> Result<BTreeSet<FeatureKind>> {
    let kinds = raw
        .iter()
        .map(|s| s.trim().parse::<FeatureKind>().map_err(anyhow::Error::msg))
        .collect::<Result<BTreeSet<_>>>()?;
    if kinds.is_empty() {
        bail!("at least one feature kind is required");
    }
    Ok(kinds)
}

pub fn pipeline(args: &PipelineArgs, common: &CommonArgs, file: &FileConfig) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(kinds) = args.kinds.as_ref().or(file.kinds.as_ref()) {
        cfg.features.kinds = parse_kinds(kinds)?;
    }
    if let Some(n) = args.char_n.as_ref().or(file.char_n.as_ref()) {
        cfg.features.char_n = n.clone();
    }
    if let Some(n) = args.word_n.as_ref().or(file.word_n.as_ref()) {
        cfg.features.word_n = n.clone();
    }
    if let Some(m) = args.min_count.or(file.min_count) {
        cfg.min_count = m;
    }
    if args.no_chi2 {
        cfg.chi2_k = None;
    } else if let Some(k) = args.chi2_k.or(file.chi2_k) {
        cfg.chi2_k = Some(k);
    }
    if let Some(kinds) = args.chi2_kinds.as_ref().or(file.chi2_kinds.as_ref()) {
        cfg.chi2_kinds = parse_kinds(kinds)?;
    }
    cfg.with_switching = !args.no_switching && file.with_switching.unwrap_or(true);
    if let Some(e) = args.epochs.or(file.epochs) {
        cfg.training.epochs = e;
    }
    if let Some(lr) = args.learning_rate.or(file.learning_rate) {
        cfg.training.learning_rate = lr;
    }
    if let Some(l2) = args.l2.or(file.l2) {
        cfg.training.l2 = l2;
    }
    cfg.training.seed = seed(common, file);
    if let Some(path) = args.negation_words.as_ref().or(file.negation_words.as_ref()) {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        cfg.negation = NegationWords::read(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))?;
    }
    let lexicon_paths = if args.lexicons.is_empty() {
        file.lexicons.clone().unwrap_or_default()
    } else {
        args.lexicons.clone()
    };
    for path in lexicon_paths {
        let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let lex =
            IndicativeLexicon::read(BufReader::new(f), &name).with_context(|| format!("reading {}", path.display()))?;
        cfg.external_lexicons.push(lex);
    }
    Ok(cfg)
}

//! End-to-end classifier pipeline: feature fitting, training, evaluation
//! and k-fold cross-validation with an optional switching-feature ablation.
//!
//! Every fitted component (vocabulary, chi-squared selection, indicative
//! lexicon, feature scaling, weights) is learned from the training corpus
//! alone.

use std::collections::{BTreeSet, HashMap};

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{kfold, CorpusError, Label, LabeledCorpus, LabeledUtterance, Token};
use crate::model::{macro_f1, train, EvalReport, LinearModel, ModelError, Scorer, TrainingMeta};
use crate::sparse::SparseVector;
use crate::textfeat::{
    build_vocabulary, chi2_select_kinds, indicative_scores, vector_dim, vectorize, FeatureError, FeatureKind,
    FeatureSpec, IndicativeLexicon, NegationWords, Vocabulary, DEFAULT_CHI2_K,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no fold had both classes in train and test")]
    NoUsableFolds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub features: FeatureSpec,
    pub min_count: u32,
    /// Chi-squared selection size; `None` disables selection.
    pub chi2_k: Option<usize>,
    /// Kinds that compete for the chi-squared slots; others are kept.
    pub chi2_kinds: BTreeSet<FeatureKind>,
    pub use_indicative: bool,
    pub indicative_floor: f64,
    /// Training utterances get their indicative score from a lexicon fit on
    /// the other parts of a split of this many parts, so the score is never
    /// computed from the utterance's own label. Values below 2 disable this.
    pub indicative_cross_fit: usize,
    pub negation: NegationWords,
    /// Fixed lexicons added to the learned one.
    pub external_lexicons: Vec<IndicativeLexicon>,
    pub with_switching: bool,
    pub training: TrainingMeta,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            features: FeatureSpec::default(),
            min_count: 2,
            chi2_k: Some(DEFAULT_CHI2_K),
            chi2_kinds: [FeatureKind::WordNgram].into_iter().collect(),
            use_indicative: true,
            indicative_floor: 0.0,
            indicative_cross_fit: 5,
            negation: NegationWords::default(),
            external_lexicons: Vec::new(),
            with_switching: true,
            training: TrainingMeta::default(),
        }
    }
}

/// Everything needed to vectorize and score new utterances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub config: PipelineConfig,
    pub vocabulary: Vocabulary,
    /// External lexicons followed by the learned one, if any.
    pub lexicons: Vec<IndicativeLexicon>,
    /// Weights apply to unscaled vectors from [`FittedPipeline::vectorize`].
    pub model: LinearModel,
}

/// Per-dimension max |x|, with 1 for all-zero dimensions.
fn max_abs_scale(vectors: &[SparseVector], dim: usize) -> Vec<f64> {
    let mut scale = vec![0.0f64; dim];
    for x in vectors {
        for &(i, v) in x.entries() {
            scale[i] = scale[i].max(v.abs());
        }
    }
    scale.iter().map(|&s| if s > 0.0 { s } else { 1.0 }).collect()
}

impl FittedPipeline {
    pub fn fit(corpus: &LabeledCorpus, config: &PipelineConfig) -> Result<Self, PipelineError> {
        if !corpus.has_both_classes() {
            return Err(ModelError::SingleClass.into());
        }
        let mut vocabulary = build_vocabulary(corpus, &config.features, config.min_count)?;
        if let Some(k) = config.chi2_k {
            vocabulary = chi2_select_kinds(corpus, &vocabulary, k, Some(&config.chi2_kinds))?;
        }
        let mut lexicons = config.external_lexicons.clone();
        if config.use_indicative {
            lexicons.push(indicative_scores(corpus, config.indicative_floor));
        }
        let encode = |tokens: &[Token], lexicons: &[IndicativeLexicon]| {
            vectorize(tokens, &vocabulary, lexicons, &config.negation, config.with_switching)
        };

        let vectors: Vec<SparseVector> = if config.use_indicative && config.indicative_cross_fit >= 2 {
            // Each training utterance is scored by a lexicon that never saw it.
            let parts = config.indicative_cross_fit.min(corpus.len());
            let mut by_id = HashMap::with_capacity(corpus.len());
            for fold in kfold(corpus, parts, config.training.seed)? {
                let mut held_out = config.external_lexicons.clone();
                held_out.push(indicative_scores(&fold.train, config.indicative_floor));
                for u in &fold.test {
                    by_id.insert(u.id, encode(u.tokens(), &held_out));
                }
            }
            corpus
                .iter()
                .map(|u| by_id.remove(&u.id).expect("folds cover the corpus"))
                .collect()
        } else {
            corpus.iter().map(|u| encode(u.tokens(), &lexicons)).collect()
        };
        let dim = vector_dim(&vocabulary, config.with_switching);
        let scale = max_abs_scale(&vectors, dim);
        let inv: Vec<f64> = scale.iter().map(|s| 1.0 / s).collect();
        let scaled: Vec<SparseVector> = vectors.iter().map(|x| x.scaled(&inv)).collect();
        let mut model = train(&scaled, &corpus.labels(), config.training)?;
        for (w, s) in model.weights.iter_mut().zip(&scale) {
            *w /= s;
        }
        Ok(FittedPipeline {
            config: config.clone(),
            vocabulary,
            lexicons,
            model,
        })
    }

    pub fn dim(&self) -> usize {
        vector_dim(&self.vocabulary, self.config.with_switching)
    }

    pub fn vectorize(&self, tokens: &[Token]) -> SparseVector {
        vectorize(
            tokens,
            &self.vocabulary,
            &self.lexicons,
            &self.config.negation,
            self.config.with_switching,
        )
    }

    pub fn predict_proba(&self, tokens: &[Token]) -> f64 {
        self.model
            .predict_proba(&self.vectorize(tokens))
            .expect("pipeline vectors match the model dimension")
    }

    pub fn predict(&self, tokens: &[Token]) -> Label {
        Label::from_bool(self.predict_proba(tokens) >= 0.5)
    }

    pub fn evaluate(&self, corpus: &LabeledCorpus) -> Result<EvalReport, PipelineError> {
        let predictions: Vec<Label> = corpus.iter().map(|u| self.predict(u.tokens())).collect();
        Ok(macro_f1(&predictions, &corpus.labels())?)
    }
}

impl Scorer for FittedPipeline {
    fn positive_probability(&self, utterance: &LabeledUtterance) -> f64 {
        self.predict_proba(utterance.tokens())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub report: Option<EvalReport>,
    /// Why the fold was excluded from the aggregate, if it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub task: String,
    pub k: usize,
    pub seed: u64,
    pub with_switching: bool,
    pub folds: Vec<FoldResult>,
    /// Mean macro-F1 over the folds that were not skipped.
    pub mean_macro_f1: f64,
}

/// k-fold cross-validation. Folds lacking a class on either side are
/// reported but excluded from the mean.
pub fn cross_validate(
    corpus: &LabeledCorpus,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<CvReport, PipelineError> {
    let folds = kfold(corpus, k, seed)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let mut result = FoldResult {
                fold: i,
                train_size: fold.train.len(),
                test_size: fold.test.len(),
                report: None,
                skipped: None,
            };
            if !fold.train.has_both_classes() {
                result.skipped = Some("single-class training fold".into());
            } else if !fold.test.has_both_classes() {
                result.skipped = Some("single-class test fold".into());
            } else {
                let fitted = FittedPipeline::fit(&fold.train, config)?;
                result.report = Some(fitted.evaluate(&fold.test)?);
            }
            Ok(result)
        })
        .collect::<Result<Vec<_>, PipelineError>>()?;

    for r in &results {
        if let Some(reason) = &r.skipped {
            warn!("fold {} excluded: {reason}", r.fold);
        }
    }
    let scores: Vec<f64> = results
        .iter()
        .filter_map(|r| r.report.as_ref().map(|e| e.macro_f1))
        .collect();
    if scores.is_empty() {
        return Err(PipelineError::NoUsableFolds);
    }
    Ok(CvReport {
        task: corpus.task_name.clone(),
        k,
        seed,
        with_switching: config.with_switching,
        folds: results,
        mean_macro_f1: scores.iter().sum::<f64>() / scores.len() as f64,
    })
}

/// The same cross-validation run without and with the switching features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub without_switching: CvReport,
    pub with_switching: CvReport,
    /// `with - without`, in macro-F1 units.
    pub delta: f64,
}

pub fn ablate_switching(
    corpus: &LabeledCorpus,
    config: &PipelineConfig,
    k: usize,
    seed: u64,
) -> Result<AblationReport, PipelineError> {
    let base = PipelineConfig {
        with_switching: false,
        ..config.clone()
    };
    let full = PipelineConfig {
        with_switching: true,
        ..config.clone()
    };
    let without_switching = cross_validate(corpus, &base, k, seed)?;
    let with_switching = cross_validate(corpus, &full, k, seed)?;
    let delta = with_switching.mean_macro_f1 - without_switching.mean_macro_f1;
    Ok(AblationReport {
        without_switching,
        with_switching,
        delta,
    })
}

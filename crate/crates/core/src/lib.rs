//! Code-switching features for language-tagged code-mixed text.
//!
//! The crate covers the whole pipeline from a tagged corpus to an evaluated
//! classifier:
//!
//! * [`corpus`]: the tagged-line format, loading, train/test and k-fold splits
//! * [`preprocess`]: punctuation removal, hashtag/mention/URL placeholders,
//!   camel-case hashtag segmentation
//! * [`switching`]: switching vectors, property Q and the nine switching features
//! * [`stats`]: conditional positive rates, average switching and phi
//! * [`textfeat`]: n-gram vocabularies, chi-squared selection, lexicons, vectorization
//! * [`model`]: logistic regression, macro-F1, negative sub-sampling
//! * [`pipeline`]: fit/evaluate/cross-validate, with and without switching features

pub mod corpus;
pub mod model;
pub mod pipeline;
pub mod preprocess;
pub mod sparse;
pub mod stats;
pub mod switching;
pub mod synth;
pub mod textfeat;

pub use corpus::{
    kfold, load_corpus, parse_tagged_line, split_train_test, CorpusError, Fold, Label, LabeledCorpus, LabeledUtterance,
    LangTag, Token,
};
pub use model::{macro_f1, subsample_negatives, train, EvalReport, LinearModel, ModelError, Scorer, TrainingMeta};
pub use pipeline::{
    ablate_switching, cross_validate, AblationReport, CvReport, FittedPipeline, PipelineConfig, PipelineError,
};
pub use preprocess::{normalize, segment_camel_case, PreprocessConfig};
pub use sparse::SparseVector;
pub use stats::{Contingency, SwitchTaskSummary};
pub use switching::{
    has_embedding_property, lang_run_vectors, switch_counts, switching_features, EmbeddingRule, SwitchProfile,
    SwitchVectors,
};
pub use textfeat::{FeatureKey, FeatureKind, FeatureSpec, Vocabulary};

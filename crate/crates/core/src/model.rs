//! Logistic regression over sparse vectors, macro-F1 evaluation and
//! confidence-based negative sub-sampling.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Label, LabeledCorpus, LabeledUtterance};
use crate::sparse::SparseVector;

pub const DEFAULT_TAU: f64 = 0.001;

const MODEL_MAGIC: &str = "codemix-linear-model";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no training examples")]
    Empty,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("length mismatch: {left} predictions vs {right} gold labels")]
    LengthMismatch { left: usize, right: usize },
    #[error("threshold tau = {0} must lie strictly between 0 and 1")]
    BadTau(f64),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Hyperparameters recorded with every model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub epochs: usize,
    /// Initial step size; the step adapts by backtracking.
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainingMeta {
    fn default() -> Self {
        TrainingMeta {
            epochs: 300,
            learning_rate: 1.0,
            l2: 1e-3,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub meta: TrainingMeta,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

impl LinearModel {
    pub fn zeros(dim: usize, meta: TrainingMeta) -> Self {
        LinearModel {
            weights: vec![0.0; dim],
            bias: 0.0,
            meta,
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &SparseVector) -> Result<(), ModelError> {
        if x.dim() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.dim(),
            });
        }
        Ok(())
    }

    pub fn decision(&self, x: &SparseVector) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(x.dot(&self.weights) + self.bias)
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &SparseVector) -> Result<f64, ModelError> {
        self.decision(x).map(sigmoid)
    }

    pub fn predict(&self, x: &SparseVector) -> Result<Label, ModelError> {
        self.predict_proba(x).map(|p| Label::from_bool(p >= 0.5))
    }

    /// Writes the flat text format: a header of `key value` lines, then the
    /// bias, then one weight per line.
    pub fn write_to(&self, mut sink: impl Write) -> std::io::Result<()> {
        writeln!(sink, "{MODEL_MAGIC} {FORMAT_VERSION}")?;
        writeln!(sink, "dimension {}", self.dim())?;
        writeln!(sink, "epochs {}", self.meta.epochs)?;
        writeln!(sink, "learning_rate {}", self.meta.learning_rate)?;
        writeln!(sink, "l2 {}", self.meta.l2)?;
        writeln!(sink, "seed {}", self.meta.seed)?;
        writeln!(sink, "{}", self.bias)?;
        for w in &self.weights {
            writeln!(sink, "{w}")?;
        }
        Ok(())
    }

    /// Reads the flat text format. When `expected_dim` is given the stored
    /// dimension must match it.
    pub fn read_from(source: impl BufRead, expected_dim: Option<usize>) -> Result<Self, ModelError> {
        let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String), ModelError> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(ModelError::Format {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let bad = |line: usize, message: String| ModelError::Format { line, message };

        let (n, magic) = next("header")?;
        match magic.split_once(' ') {
            Some((MODEL_MAGIC, v)) if v.trim() == FORMAT_VERSION.to_string() => {}
            Some((MODEL_MAGIC, v)) => return Err(bad(n, format!("unsupported format version {v}"))),
            _ => return Err(bad(n, "not a codemix model file".into())),
        }
        let mut field = |key: &str| -> Result<(usize, String), ModelError> {
            let (n, l) = next(key)?;
            match l.split_once(' ') {
                Some((k, v)) if k == key => Ok((n, v.trim().to_string())),
                _ => Err(bad(n, format!("expected `{key} <value>`"))),
            }
        };
        fn parse<T: std::str::FromStr>(n: usize, v: &str) -> Result<T, ModelError> {
            v.parse().map_err(|_| ModelError::Format {
                line: n,
                message: format!("cannot parse {v:?}"),
            })
        }
        let (n, v) = field("dimension")?;
        let dim: usize = parse(n, &v)?;
        let (n, v) = field("epochs")?;
        let epochs = parse(n, &v)?;
        let (n, v) = field("learning_rate")?;
        let learning_rate = parse(n, &v)?;
        let (n, v) = field("l2")?;
        let l2 = parse(n, &v)?;
        let (n, v) = field("seed")?;
        let seed = parse(n, &v)?;

        if let Some(expected) = expected_dim {
            if expected != dim {
                return Err(ModelError::DimensionMismatch { expected, got: dim });
            }
        }
        let (n, v) = next("bias")?;
        let bias: f64 = parse(n, v.trim())?;
        let mut weights = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (n, v) = next("weight")?;
            weights.push(parse(n, v.trim())?);
        }
        if let Some((n, Ok(extra))) = lines.next() {
            if !extra.trim().is_empty() {
                return Err(bad(n, "trailing data after weights".into()));
            }
        }
        Ok(LinearModel {
            weights,
            bias,
            meta: TrainingMeta {
                epochs,
                learning_rate,
                l2,
                seed,
            },
        })
    }
}

/// Mean binary cross-entropy plus `l2 / 2 * |w|^2` (bias unpenalized).
pub struct Objective<'a> {
    vectors: &'a [SparseVector],
    targets: Vec<f64>,
    l2: f64,
}

impl<'a> Objective<'a> {
    pub fn new(vectors: &'a [SparseVector], labels: &[Label], l2: f64) -> Result<Self, ModelError> {
        if vectors.is_empty() {
            return Err(ModelError::Empty);
        }
        if vectors.len() != labels.len() {
            return Err(ModelError::LengthMismatch {
                left: vectors.len(),
                right: labels.len(),
            });
        }
        let dim = vectors[0].dim();
        if let Some(bad) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(ModelError::DimensionMismatch {
                expected: dim,
                got: bad.dim(),
            });
        }
        Ok(Objective {
            vectors,
            targets: labels.iter().map(|l| f64::from(u8::from(l.is_positive()))).collect(),
            l2,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    fn penalty(&self, weights: &[f64]) -> f64 {
        0.5 * self.l2 * weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn loss(&self, weights: &[f64], bias: f64) -> f64 {
        let n = self.vectors.len() as f64;
        let data: f64 = self
            .vectors
            .iter()
            .zip(&self.targets)
            .map(|(x, &y)| {
                let z = x.dot(weights) + bias;
                softplus(z) - y * z
            })
            .sum();
        data / n + self.penalty(weights)
    }

    /// Loss together with the gradient in weights and bias.
    pub fn loss_and_gradient(&self, weights: &[f64], bias: f64) -> (f64, Vec<f64>, f64) {
        let n = self.vectors.len() as f64;
        let mut grad: Vec<f64> = weights.iter().map(|w| self.l2 * w).collect();
        let mut grad_bias = 0.0;
        let mut data = 0.0;
        for (x, &y) in self.vectors.iter().zip(&self.targets) {
            let z = x.dot(weights) + bias;
            data += softplus(z) - y * z;
            let residual = (sigmoid(z) - y) / n;
            grad_bias += residual;
            for &(i, v) in x.entries() {
                grad[i] += residual * v;
            }
        }
        (data / n + self.penalty(weights), grad, grad_bias)
    }
}

/// A trained model with its per-epoch loss trace (entry 0 is the initial loss).
#[derive(Debug, Clone)]
pub struct TrainTrace {
    pub model: LinearModel,
    pub losses: Vec<f64>,
}

/// Full-batch gradient descent from zero weights with Armijo backtracking,
/// so the loss never increases between epochs. The result depends only on
/// the data and the hyperparameters.
pub fn train_traced(vectors: &[SparseVector], labels: &[Label], meta: TrainingMeta) -> Result<TrainTrace, ModelError> {
    let objective = Objective::new(vectors, labels, meta.l2)?;
    let positives = labels.iter().filter(|l| l.is_positive()).count();
    if positives == 0 || positives == labels.len() {
        return Err(ModelError::SingleClass);
    }
    let mut weights = vec![0.0; objective.dim()];
    let mut bias = 0.0;
    let (mut loss, mut grad, mut grad_bias) = objective.loss_and_gradient(&weights, bias);
    let mut losses = vec![loss];
    let mut step = meta.learning_rate;
    let mut candidate = vec![0.0; weights.len()];

    'epochs: for _ in 0..meta.epochs {
        let grad_norm2 = grad.iter().map(|g| g * g).sum::<f64>() + grad_bias * grad_bias;
        if grad_norm2 < 1e-20 {
            break;
        }
        loop {
            for ((c, w), g) in candidate.iter_mut().zip(&weights).zip(&grad) {
                *c = w - step * g;
            }
            let candidate_bias = bias - step * grad_bias;
            let candidate_loss = objective.loss(&candidate, candidate_bias);
            if candidate_loss <= loss - 0.5 * step * grad_norm2 {
                std::mem::swap(&mut weights, &mut candidate);
                bias = candidate_bias;
                break;
            }
            step *= 0.5;
            if step < 1e-12 {
                break 'epochs;
            }
        }
        (loss, grad, grad_bias) = objective.loss_and_gradient(&weights, bias);
        losses.push(loss);
        step *= 2.0;
    }
    Ok(TrainTrace {
        model: LinearModel { weights, bias, meta },
        losses,
    })
}

pub fn train(vectors: &[SparseVector], labels: &[Label], meta: TrainingMeta) -> Result<LinearModel, ModelError> {
    train_traced(vectors, labels, meta).map(|t| t.model)
}

/// Counts with respect to the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub macro_f1: f64,
    pub f1_positive: f64,
    pub f1_negative: f64,
    pub confusion: Confusion,
    /// Classes with neither predicted nor gold instances; their F1 counts as 0.
    pub absent_classes: Vec<Label>,
}

fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        (2 * tp) as f64 / denom as f64
    }
}

pub fn macro_f1(predictions: &[Label], gold: &[Label]) -> Result<EvalReport, ModelError> {
    if predictions.len() != gold.len() {
        return Err(ModelError::LengthMismatch {
            left: predictions.len(),
            right: gold.len(),
        });
    }
    if gold.is_empty() {
        return Err(ModelError::Empty);
    }
    let mut c = Confusion::default();
    for (p, g) in predictions.iter().zip(gold) {
        match (p.is_positive(), g.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    let f1_positive = f1(c.tp, c.fp, c.fn_);
    let f1_negative = f1(c.tn, c.fn_, c.fp);
    let mut absent_classes = Vec::new();
    if c.tp + c.fp + c.fn_ == 0 {
        absent_classes.push(Label::Positive);
    }
    if c.tn + c.fp + c.fn_ == 0 {
        absent_classes.push(Label::Negative);
    }
    Ok(EvalReport {
        macro_f1: (f1_positive + f1_negative) / 2.0,
        f1_positive,
        f1_negative,
        confusion: c,
        absent_classes,
    })
}

/// Anything that assigns an utterance a positive-class probability.
pub trait Scorer {
    fn positive_probability(&self, utterance: &LabeledUtterance) -> f64;
}

impl<F: Fn(&LabeledUtterance) -> f64> Scorer for F {
    fn positive_probability(&self, utterance: &LabeledUtterance) -> f64 {
        self(utterance)
    }
}

/// Drops the negatives the scorer considers easy (probability below `tau`).
/// Positives are always kept; order is preserved.
pub fn subsample_negatives(
    corpus: &LabeledCorpus,
    scorer: &impl Scorer,
    tau: f64,
) -> Result<LabeledCorpus, ModelError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(ModelError::BadTau(tau));
    }
    Ok(corpus.filtered(|u| u.label().is_positive() || scorer.positive_probability(u) >= tau))
}

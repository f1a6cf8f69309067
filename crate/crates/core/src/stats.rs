//! Association between switching behaviour and task labels.
//!
//! The contingency table crosses the label (rows) with property Q
//! (columns): `n11` = positive with Q, `n10` = positive without Q,
//! `n01` = negative with Q, `n00` = negative without Q.

use std::fmt::Write as _;
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::corpus::{LabeledCorpus, LabeledUtterance};
use crate::switching::{has_embedding_property, switch_counts, EmbeddingRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Contingency {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl Contingency {
    pub fn record(&mut self, positive: bool, q: bool) {
        match (positive, q) {
            (true, true) => self.n11 += 1,
            (true, false) => self.n10 += 1,
            (false, true) => self.n01 += 1,
            (false, false) => self.n00 += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Phi coefficient; `None` when any marginal is zero.
    pub fn phi(&self) -> Option<f64> {
        let [a, b, c, d] = [self.n11, self.n10, self.n01, self.n00].map(|x| x as f64);
        let denom = (a + b) * (c + d) * (a + c) * (b + d);
        if denom == 0.0 {
            return None;
        }
        Some((a * d - b * c) / denom.sqrt())
    }

    /// P(positive | Q).
    pub fn p_pos_given_q(&self) -> Option<f64> {
        ratio(self.n11, self.n11 + self.n01)
    }

    /// P(positive | not Q).
    pub fn p_pos_given_not_q(&self) -> Option<f64> {
        ratio(self.n10, self.n10 + self.n00)
    }
}

impl Add for Contingency {
    type Output = Contingency;

    fn add(self, rhs: Contingency) -> Contingency {
        Contingency {
            n11: self.n11 + rhs.n11,
            n10: self.n10 + rhs.n10,
            n01: self.n01 + rhs.n01,
            n00: self.n00 + rhs.n00,
        }
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn q_of(u: &LabeledUtterance, rule: EmbeddingRule) -> bool {
    has_embedding_property(u.tokens(), rule)
}

pub fn contingency(corpus: &LabeledCorpus, rule: EmbeddingRule) -> Contingency {
    let mut table = Contingency::default();
    for u in corpus {
        table.record(u.label().is_positive(), q_of(u, rule));
    }
    table
}

/// `(P(pos | Q), P(pos | not Q))`; an empty conditioning cell gives `None`.
pub fn conditional_positive_rates(corpus: &LabeledCorpus, rule: EmbeddingRule) -> (Option<f64>, Option<f64>) {
    let table = contingency(corpus, rule);
    (table.p_pos_given_q(), table.p_pos_given_not_q())
}

/// Mean number of switches `V` over positives and over negatives.
pub fn average_switching(corpus: &LabeledCorpus) -> (Option<f64>, Option<f64>) {
    let (mut pos_sum, mut pos_n, mut neg_sum, mut neg_n) = (0u64, 0u64, 0u64, 0u64);
    for u in corpus {
        let v = u64::from(switch_counts(u.tokens()).total());
        if u.label().is_positive() {
            pos_sum += v;
            pos_n += 1;
        } else {
            neg_sum += v;
            neg_n += 1;
        }
    }
    (ratio(pos_sum, pos_n), ratio(neg_sum, neg_n))
}

pub fn phi_correlation(corpus: &LabeledCorpus, rule: EmbeddingRule) -> Option<f64> {
    contingency(corpus, rule).phi()
}

/// One column of the switching/label report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchTaskSummary {
    pub task: String,
    pub p_pos_given_q: Option<f64>,
    pub p_pos_given_not_q: Option<f64>,
    pub avg_switch_pos: Option<f64>,
    pub avg_switch_neg: Option<f64>,
    pub phi: Option<f64>,
    pub counts: Contingency,
}

pub fn summarize(corpus: &LabeledCorpus, rule: EmbeddingRule) -> SwitchTaskSummary {
    let counts = contingency(corpus, rule);
    let (avg_switch_pos, avg_switch_neg) = average_switching(corpus);
    SwitchTaskSummary {
        task: corpus.task_name.clone(),
        p_pos_given_q: counts.p_pos_given_q(),
        p_pos_given_not_q: counts.p_pos_given_not_q(),
        avg_switch_pos,
        avg_switch_neg,
        phi: counts.phi(),
        counts,
    }
}

fn cell(value: Option<f64>) -> String {
    value.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
}

/// Renders summaries as a TSV with one row per statistic and one column per
/// task. Undefined values print as `NA`.
pub fn render_tsv(summaries: &[SwitchTaskSummary]) -> String {
    let mut out = String::from("statistic");
    for s in summaries {
        out.push('\t');
        out.push_str(&s.task);
    }
    out.push('\n');
    type Row = (&'static str, fn(&SwitchTaskSummary) -> Option<f64>);
    let rows: [Row; 5] = [
        ("p(T|Q)", |s| s.p_pos_given_q),
        ("p(T|~Q)", |s| s.p_pos_given_not_q),
        ("avg(S|T)", |s| s.avg_switch_pos),
        ("avg(S|~T)", |s| s.avg_switch_neg),
        ("phi", |s| s.phi),
    ];
    for (name, get) in rows {
        out.push_str(name);
        for s in summaries {
            let _ = write!(out, "\t{}", cell(get(s)));
        }
        out.push('\n');
    }
    out
}

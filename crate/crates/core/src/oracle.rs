//! Hard-label target-model abstraction, the adversarial criterion, query
//! accounting, and deterministic bag-of-words classifiers used as desk-scale
//! targets. The attack only ever sees the top-1 label, so any oracle behind
//! the trait is faithful to the threat model.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::sync::atomic::{AtomicU64, Ordering};

use crate::text::split_words;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("oracle query budget exhausted")]
    BudgetExhausted,
    #[error("transport error: {0}")]
    Transport(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("oracle request timed out")]
    Timeout,
}

/// A target model exposed as a top-1 label oracle. Implementations must be
/// deterministic: identical input, identical label.
pub trait HardLabelOracle: Sync {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError>;
    fn label_count(&self) -> usize;
}

/// Counts oracle calls; optionally enforces a budget. Increments are atomic
/// so one ledger can back concurrent attacks.
#[derive(Debug, Default)]
pub struct QueryLedger {
    total: AtomicU64,
    budget: Option<u64>,
}

impl QueryLedger {
    pub fn unlimited() -> QueryLedger {
        QueryLedger {
            total: AtomicU64::new(0),
            budget: None,
        }
    }

    pub fn with_budget(budget: u64) -> QueryLedger {
        QueryLedger {
            total: AtomicU64::new(0),
            budget: Some(budget),
        }
    }

    pub fn total(&self) -> u64 {
        self.total.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    /// Reserves one query, failing without incrementing when the budget is
    /// already spent.
    pub fn charge(&self) -> Result<(), OracleError> {
        match self.budget {
            None => {
                self.total.fetch_add(1, Ordering::SeqCst);
                Ok(())
            }
            Some(budget) => self
                .total
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |t| {
                    if t < budget {
                        Some(t + 1)
                    } else {
                        None
                    }
                })
                .map(|_| ())
                .map_err(|_| OracleError::BudgetExhausted),
        }
    }
}

/// One ledger-accounted oracle call.
pub fn predict(
    oracle: &dyn HardLabelOracle,
    text: &str,
    ledger: &QueryLedger,
) -> Result<usize, OracleError> {
    ledger.charge()?;
    oracle.predict_label(text)
}

/// The adversarial criterion: true iff the oracle's label on `text` differs
/// from `orig_label`. Consumes exactly one query.
pub fn adversarial_criterion(
    orig_label: usize,
    oracle: &dyn HardLabelOracle,
    text: &str,
    ledger: &QueryLedger,
) -> Result<bool, OracleError> {
    Ok(predict(oracle, text, ledger)? != orig_label)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum BowVariant {
    NaiveBayes,
    Linear,
}

/// Bag-of-words classifier: per-word per-label weights plus a bias, argmax
/// over label scores with lowest-label-id tie-break. Words outside the
/// training vocabulary are skipped at prediction, so an unseen word never
/// changes the argmax.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BowClassifier {
    pub variant: BowVariant,
    /// Number of classes; labels are `0..labels`.
    pub labels: usize,
    /// word -> per-label weight, one entry per vocabulary word.
    pub weights: BTreeMap<String, Vec<f64>>,
    /// per-label bias (log prior for naive Bayes).
    pub bias: Vec<f64>,
}

impl BowClassifier {
    /// Per-label scores for a raw text; the prediction is their argmax.
    pub fn scores(&self, text: &str) -> Vec<f64> {
        let mut scores = self.bias.clone();
        for word in split_words(text) {
            let word = word.to_lowercase();
            if let Some(ws) = self.weights.get(&word) {
                for (s, w) in scores.iter_mut().zip(ws) {
                    *s += w;
                }
            }
        }
        scores
    }

    pub fn predict_raw(&self, text: &str) -> usize {
        argmax(&self.scores(text))
    }
}

impl HardLabelOracle for BowClassifier {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError> {
        Ok(self.predict_raw(text))
    }

    fn label_count(&self) -> usize {
        self.labels
    }
}

/// Argmax with lowest-index tie-break.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("training dataset contains a single class")]
    SingleClassDataset,
}

const PERCEPTRON_EPOCHS: usize = 10;

/// Trains a bag-of-words classifier. Naive Bayes uses add-one smoothing over
/// token counts; the linear variant is an averaged perceptron run for a
/// fixed epoch count in dataset order. Returns the model and its training
/// accuracy.
pub fn train_bow(
    dataset: &[(String, usize)],
    variant: BowVariant,
) -> Result<(BowClassifier, f64), TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let labels = dataset.iter().map(|(_, y)| *y).max().unwrap() + 1;
    let present: BTreeSet<usize> = dataset.iter().map(|(_, y)| *y).collect();
    if present.len() < 2 {
        return Err(TrainError::SingleClassDataset);
    }

    let docs: Vec<(Vec<String>, usize)> = dataset
        .iter()
        .map(|(text, y)| {
            let toks = split_words(text)
                .into_iter()
                .map(|w| w.to_lowercase())
                .collect();
            (toks, *y)
        })
        .collect();

    let model = match variant {
        BowVariant::NaiveBayes => train_naive_bayes(&docs, labels),
        BowVariant::Linear => train_averaged_perceptron(&docs, labels),
    };

    let correct = dataset
        .iter()
        .filter(|(text, y)| model.predict_raw(text) == *y)
        .count();
    let accuracy = correct as f64 / dataset.len() as f64;
    Ok((model, accuracy))
}

fn train_naive_bayes(docs: &[(Vec<String>, usize)], labels: usize) -> BowClassifier {
    let mut word_counts: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut class_tokens = alloc::vec![0u64; labels];
    let mut class_docs = alloc::vec![0u64; labels];
    for (toks, y) in docs {
        class_docs[*y] += 1;
        for tok in toks {
            word_counts
                .entry(tok.clone())
                .or_insert_with(|| alloc::vec![0; labels])[*y] += 1;
            class_tokens[*y] += 1;
        }
    }
    let vocab = word_counts.len() as f64;
    let total_docs = docs.len() as f64;
    let bias: Vec<f64> = class_docs
        .iter()
        .map(|&c| libm::log((c as f64 + 1.0) / (total_docs + labels as f64)))
        .collect();
    let weights: BTreeMap<String, Vec<f64>> = word_counts
        .into_iter()
        .map(|(word, counts)| {
            let ws = counts
                .iter()
                .zip(&class_tokens)
                .map(|(&c, &n)| libm::log((c as f64 + 1.0) / (n as f64 + vocab)))
                .collect();
            (word, ws)
        })
        .collect();
    BowClassifier {
        variant: BowVariant::NaiveBayes,
        labels,
        weights,
        bias,
    }
}

fn train_averaged_perceptron(docs: &[(Vec<String>, usize)], labels: usize) -> BowClassifier {
    let mut weights: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut bias = alloc::vec![0.0; labels];
    let mut sum_weights: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut sum_bias = alloc::vec![0.0; labels];
    for (toks, _) in docs {
        for tok in toks {
            weights
                .entry(tok.clone())
                .or_insert_with(|| alloc::vec![0.0; labels]);
            sum_weights
                .entry(tok.clone())
                .or_insert_with(|| alloc::vec![0.0; labels]);
        }
    }
    let mut steps = 0u64;
    for _ in 0..PERCEPTRON_EPOCHS {
        for (toks, y) in docs {
            let mut scores = bias.clone();
            for tok in toks {
                for (s, w) in scores.iter_mut().zip(&weights[tok]) {
                    *s += w;
                }
            }
            let pred = argmax(&scores);
            if pred != *y {
                for tok in toks {
                    let ws = weights.get_mut(tok).unwrap();
                    ws[*y] += 1.0;
                    ws[pred] -= 1.0;
                }
                bias[*y] += 1.0;
                bias[pred] -= 1.0;
            }
            steps += 1;
            for (sw, w) in sum_bias.iter_mut().zip(&bias) {
                *sw += w;
            }
            for (tok, ws) in &weights {
                let sums = sum_weights.get_mut(tok).unwrap();
                for (sw, w) in sums.iter_mut().zip(ws) {
                    *sw += w;
                }
            }
        }
    }
    let n = steps as f64;
    BowClassifier {
        variant: BowVariant::Linear,
        labels,
        weights: sum_weights
            .into_iter()
            .map(|(w, ws)| (w, ws.into_iter().map(|x| x / n).collect()))
            .collect(),
        bias: sum_bias.into_iter().map(|x| x / n).collect(),
    }
}

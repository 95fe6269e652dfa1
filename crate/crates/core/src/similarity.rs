//! Sentence similarity Sim(X, X') used as objective and GA fitness.
//!
//! The scorer is an interface so a neural sentence encoder can be plugged in
//! from the std side; the default is the mean of counter-fitted embeddings
//! over content words, which keeps the core deterministic and self-contained.

use alloc::vec::Vec;

use crate::lexicon::{cosine, EmbeddingTable};
use crate::text::TokenizedText;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("text has no encodable tokens")]
    NoEncodableTokens,
    #[error("encoding degenerated to a zero vector")]
    ZeroVector,
    #[error("external encoder failed: {0}")]
    Encoder(alloc::string::String),
}

/// Maps a tokenised text to a fixed-dimension vector. Identical texts must
/// encode identically; implementations are shared read-only across attacks.
pub trait SentenceEncoder: Sync {
    fn encode(&self, text: &TokenizedText) -> Result<Vec<f64>, SimError>;
}

/// Arithmetic mean of embeddings over in-vocabulary non-stopword tokens,
/// falling back to all in-vocabulary tokens when everything is a stopword.
pub struct MeanEncoder<'a> {
    table: &'a EmbeddingTable,
}

impl<'a> MeanEncoder<'a> {
    pub fn new(table: &'a EmbeddingTable) -> MeanEncoder<'a> {
        MeanEncoder { table }
    }
}

impl SentenceEncoder for MeanEncoder<'_> {
    fn encode(&self, text: &TokenizedText) -> Result<Vec<f64>, SimError> {
        let content: Vec<&[f64]> = text
            .tokens
            .iter()
            .filter(|t| !t.is_stopword)
            .filter_map(|t| self.table.get(&t.surface))
            .collect();
        let vecs = if content.is_empty() {
            text.tokens
                .iter()
                .filter_map(|t| self.table.get(&t.surface))
                .collect()
        } else {
            content
        };
        if vecs.is_empty() {
            return Err(SimError::NoEncodableTokens);
        }
        let mut mean = alloc::vec![0.0; self.table.dim()];
        for v in &vecs {
            for (m, x) in mean.iter_mut().zip(*v) {
                *m += x;
            }
        }
        let n = vecs.len() as f64;
        for m in &mut mean {
            *m /= n;
        }
        Ok(mean)
    }
}

/// Cosine of the two encodings.
pub fn sim(
    a: &TokenizedText,
    b: &TokenizedText,
    encoder: &dyn SentenceEncoder,
) -> Result<f64, SimError> {
    let ea = encoder.encode(a)?;
    let eb = encoder.encode(b)?;
    cosine(&ea, &eb).map_err(|_| SimError::ZeroVector)
}

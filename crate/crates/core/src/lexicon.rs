//! Counter-fitted word embeddings and the top-k synonym index.
//!
//! Nearest neighbours are exact (full scan per word). An index is built once
//! per embedding table and shared read-only by every attack.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::text::{Lexicon, Pos};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EmbeddingError {
    #[error("embedding file is empty")]
    EmptyFile,
    #[error("malformed embedding row at line {line}")]
    MalformedRow { line: usize },
    #[error("dimension mismatch at line {line}: expected {expected}, got {got}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("duplicate vocabulary entry `{word}` at line {line}")]
    DuplicateWord { word: String, line: usize },
}

/// word -> dense vector, all of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: BTreeMap<String, Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(vectors: BTreeMap<String, Vec<f64>>) -> Result<EmbeddingTable, EmbeddingError> {
        let dim = match vectors.values().next() {
            Some(v) => v.len(),
            None => return Err(EmbeddingError::EmptyFile),
        };
        for (line, v) in vectors.values().enumerate() {
            if v.len() != dim {
                return Err(EmbeddingError::DimensionMismatch {
                    line: line + 1,
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        Ok(EmbeddingTable { vectors, dim })
    }

    /// Parses `word v1 v2 ... vd` lines, one word per line, dimension
    /// inferred from the first row.
    pub fn parse(data: &str) -> Result<EmbeddingTable, EmbeddingError> {
        let mut vectors: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        let mut dim = None;
        for (i, raw_line) in data.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let word = fields
                .next()
                .ok_or(EmbeddingError::MalformedRow { line: i + 1 })?
                .to_owned();
            let mut vec = Vec::new();
            for field in fields {
                let v: f64 = field
                    .parse()
                    .map_err(|_| EmbeddingError::MalformedRow { line: i + 1 })?;
                vec.push(v);
            }
            if vec.is_empty() {
                return Err(EmbeddingError::MalformedRow { line: i + 1 });
            }
            match dim {
                None => dim = Some(vec.len()),
                Some(d) if d != vec.len() => {
                    return Err(EmbeddingError::DimensionMismatch {
                        line: i + 1,
                        expected: d,
                        got: vec.len(),
                    })
                }
                Some(_) => {}
            }
            if vectors.insert(word.clone(), vec).is_some() {
                return Err(EmbeddingError::DuplicateWord { word, line: i + 1 });
            }
        }
        let dim = dim.ok_or(EmbeddingError::EmptyFile)?;
        Ok(EmbeddingTable { vectors, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.vectors.iter().map(|(w, v)| (w.as_str(), v.as_slice()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("cosine of a zero vector is undefined")]
pub struct ZeroVector;

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    libm::sqrt(dot(u, u))
}

/// Cosine similarity in [-1, 1]. Panics on dimension mismatch (caller bug).
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, ZeroVector> {
    assert_eq!(u.len(), v.len(), "cosine over mismatched dimensions");
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return Err(ZeroVector);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// word -> top-k nearest vocabulary words by cosine, self excluded, sorted by
/// descending score with lexicographic tie-break. POS filtering happens at
/// query time so one index serves all tags.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SynonymIndex {
    entries: BTreeMap<String, Vec<(String, f64)>>,
    k: usize,
}

impl SynonymIndex {
    pub fn from_entries(entries: BTreeMap<String, Vec<(String, f64)>>, k: usize) -> SynonymIndex {
        SynonymIndex { entries, k }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn entries(&self) -> &BTreeMap<String, Vec<(String, f64)>> {
        &self.entries
    }

    /// Unfiltered top-k list; empty for unknown words.
    pub fn raw_synonyms(&self, word: &str) -> &[(String, f64)] {
        self.entries.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    /// The word's synonym list filtered to entries tagged `required_pos`.
    pub fn synonyms_for<'a>(
        &'a self,
        word: &str,
        required_pos: Pos,
        lexicon: &Lexicon,
    ) -> Vec<&'a str> {
        self.raw_synonyms(word)
            .iter()
            .filter(|(syn, _)| lexicon.pos_tag(syn) == required_pos)
            .map(|(syn, _)| syn.as_str())
            .collect()
    }
}

/// Exact top-k nearest neighbours for every vocabulary word. Words with a
/// zero vector get empty lists and never appear as neighbours.
pub fn build_synonym_index(table: &EmbeddingTable, k: usize) -> SynonymIndex {
    let words: Vec<(&str, &[f64])> = table.iter().collect();
    let mut entries = BTreeMap::new();
    for &(word, vec) in &words {
        let mut scored: Vec<(&str, f64)> = Vec::new();
        if k > 0 && norm(vec) > 0.0 {
            for &(other, ovec) in &words {
                if other == word {
                    continue;
                }
                if let Ok(score) = cosine(vec, ovec) {
                    scored.push((other, score));
                }
            }
            scored.sort_by(|a, b| {
                b.1.partial_cmp(&a.1)
                    .unwrap_or(core::cmp::Ordering::Equal)
                    .then_with(|| a.0.cmp(b.0))
            });
            scored.truncate(k);
        }
        entries.insert(
            word.to_owned(),
            scored
                .into_iter()
                .map(|(w, s)| (w.to_owned(), s))
                .collect(),
        );
    }
    SynonymIndex::from_entries(entries, k)
}

/// Convenience: `synonyms_for` on a bare index + lexicon pair.
pub fn synonyms_for<'a>(
    index: &'a SynonymIndex,
    word: &str,
    required_pos: Pos,
    lexicon: &Lexicon,
) -> Vec<&'a str> {
    index.synonyms_for(word, required_pos, lexicon)
}

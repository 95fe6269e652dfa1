//! Shared fixtures: a small hand-built embedding space on the unit circle,
//! a matching POS lexicon, and keyword-triggered oracles whose decision
//! rules are transparent enough to verify attacks by hand.
#![allow(dead_code)] // not every test binary uses every fixture

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;

use hardlabel::lexicon::{build_synonym_index, EmbeddingTable, SynonymIndex};
use hardlabel::oracle::{HardLabelOracle, OracleError};
use hardlabel::text::Lexicon;

fn unit(degrees: f64) -> Vec<f64> {
    let r = degrees * PI / 180.0;
    vec![r.cos(), r.sin()]
}

/// Adjectives near 0 degrees, nouns near 90, negative adjectives near 180.
/// `alpha` and `beta` share one vector to exercise tie-breaking.
pub fn embeddings() -> EmbeddingTable {
    let rows: Vec<(&str, f64)> = vec![
        ("good", 0.0),
        ("great", 5.0),
        ("fine", 10.0),
        ("nice", 15.0),
        ("decent", 20.0),
        ("alpha", 25.0),
        ("beta", 25.0),
        ("movie", 90.0),
        ("film", 85.0),
        ("flick", 80.0),
        ("bad", 180.0),
        ("awful", 175.0),
        ("poor", 170.0),
    ];
    let table: BTreeMap<String, Vec<f64>> = rows
        .into_iter()
        .map(|(w, deg)| (w.to_string(), unit(deg)))
        .collect();
    EmbeddingTable::new(table).unwrap()
}

pub fn lexicon() -> Lexicon {
    let pos = Lexicon::parse_pos_lexicon(
        "good\tADJ\ngreat\tADJ\nfine\tADJ\nnice\tADJ\ndecent\tADJ\n\
         alpha\tADJ\nbeta\tADJ\n\
         movie\tNOUN\nfilm\tNOUN\nflick\tNOUN\n\
         bad\tADJ\nawful\tADJ\npoor\tADJ\n",
    )
    .unwrap();
    let stop = Lexicon::parse_stopwords("the\na\nan\nis\nwas\n");
    Lexicon::new(pos, stop)
}

pub fn index(k: usize) -> SynonymIndex {
    build_synonym_index(&embeddings(), k)
}

/// Label 1 when any trigger word is present, else 0.
pub struct KeywordOracle {
    pub triggers: BTreeSet<String>,
}

impl KeywordOracle {
    pub fn new(triggers: &[&str]) -> KeywordOracle {
        KeywordOracle {
            triggers: triggers.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl HardLabelOracle for KeywordOracle {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError> {
        let hit = text
            .split_whitespace()
            .any(|w| self.triggers.contains(w));
        Ok(usize::from(hit))
    }

    fn label_count(&self) -> usize {
        2
    }
}

/// Label 0 while at least `min_hits` trigger words remain, else 1. With
/// min_hits = 1 this is the "flip only when the keyword is gone" oracle.
pub struct ThresholdOracle {
    pub triggers: BTreeSet<String>,
    pub min_hits: usize,
}

impl ThresholdOracle {
    pub fn new(triggers: &[&str], min_hits: usize) -> ThresholdOracle {
        ThresholdOracle {
            triggers: triggers.iter().map(|s| s.to_string()).collect(),
            min_hits,
        }
    }
}

impl HardLabelOracle for ThresholdOracle {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError> {
        let hits = text
            .split_whitespace()
            .filter(|w| self.triggers.contains(*w))
            .count();
        Ok(usize::from(hits < self.min_hits))
    }

    fn label_count(&self) -> usize {
        2
    }
}

/// Labels 1 exactly for an enumerated set of texts, 0 otherwise. Lets a test
/// pin down non-monotone decision rules.
pub struct ExactTextOracle {
    pub adversarial: BTreeSet<String>,
}

impl ExactTextOracle {
    pub fn new(texts: &[&str]) -> ExactTextOracle {
        ExactTextOracle {
            adversarial: texts.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl HardLabelOracle for ExactTextOracle {
    fn predict_label(&self, text: &str) -> Result<usize, OracleError> {
        Ok(usize::from(self.adversarial.contains(text)))
    }

    fn label_count(&self) -> usize {
        2
    }
}

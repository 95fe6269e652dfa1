//! File loading and model persistence.

use anyhow::Context;
use hardlabel::{BowClassifier, EmbeddingTable, Lexicon};
use std::fs;
use std::path::Path;

/// Loads an embedding file (`word v1 … vd` per line). Returns the table and
/// the raw file content, which keys the synonym-index cache.
pub fn load_embeddings(path: &Path) -> anyhow::Result<(EmbeddingTable, String)> {
    let data = fs::read_to_string(path)
        .with_context(|| format!("cannot read embeddings {}", path.display()))?;
    let table = EmbeddingTable::parse(&data)
        .with_context(|| format!("cannot parse embeddings {}", path.display()))?;
    Ok((table, data))
}

pub fn load_lexicon(pos_path: &Path, stopword_path: &Path) -> anyhow::Result<Lexicon> {
    let pos_data = fs::read_to_string(pos_path)
        .with_context(|| format!("cannot read POS lexicon {}", pos_path.display()))?;
    let pos = Lexicon::parse_pos_lexicon(&pos_data)
        .with_context(|| format!("cannot parse POS lexicon {}", pos_path.display()))?;
    let stop_data = fs::read_to_string(stopword_path)
        .with_context(|| format!("cannot read stopwords {}", stopword_path.display()))?;
    Ok(Lexicon::new(pos, Lexicon::parse_stopwords(&stop_data)))
}

pub fn load_bow(path: &Path) -> anyhow::Result<BowClassifier> {
    let data =
        fs::read_to_string(path).with_context(|| format!("cannot read model {}", path.display()))?;
    serde_json::from_str(&data).with_context(|| format!("cannot parse model {}", path.display()))
}

pub fn save_bow(path: &Path, model: &BowClassifier) -> anyhow::Result<()> {
    let data = serde_json::to_string_pretty(model)?;
    fs::write(path, data).with_context(|| format!("cannot write model {}", path.display()))
}

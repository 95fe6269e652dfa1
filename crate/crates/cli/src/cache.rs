//! Synonym-index cache, keyed by the digest of the embedding source and k.
//!
//! The index build is O(|V|²·d); attacks reuse it across runs. The cache
//! lives under `ATTACK_CACHE_DIR` when that variable is set and is skipped
//! otherwise. The digest is part of the file name, so editing the embedding
//! file automatically invalidates old entries.

use hardlabel::{build_synonym_index, EmbeddingTable, SynonymIndex};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

pub const CACHE_DIR_VAR: &str = "ATTACK_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheOutcome {
    Disabled,
    Hit,
    Rebuilt,
}

fn digest_hex(source: &str) -> String {
    let digest = Sha256::digest(source.as_bytes());
    digest.iter().fold(String::new(), |mut acc, b| {
        let _ = write!(acc, "{b:02x}");
        acc
    })
}

pub fn cache_path(source: &str, k: usize) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_DIR_VAR)?;
    Some(PathBuf::from(dir).join(format!("synonyms-{}-k{}.json", digest_hex(source), k)))
}

/// Returns the top-k synonym index for `table`, reading it from the cache
/// when possible. Unreadable or corrupt cache entries are rebuilt in place.
pub fn synonym_index_cached(
    table: &EmbeddingTable,
    source: &str,
    k: usize,
) -> (SynonymIndex, CacheOutcome) {
    let path = match cache_path(source, k) {
        Some(p) => p,
        None => return (build_synonym_index(table, k), CacheOutcome::Disabled),
    };
    if let Ok(data) = fs::read_to_string(&path) {
        if let Ok(index) = serde_json::from_str::<SynonymIndex>(&data) {
            if index.k() == k {
                return (index, CacheOutcome::Hit);
            }
        }
    }
    let index = build_synonym_index(table, k);
    if let Some(parent) = path.parent() {
        let _ = fs::create_dir_all(parent);
    }
    if let Ok(data) = serde_json::to_string(&index) {
        // cache write failures are non-fatal; the index is already built
        let _ = fs::write(&path, data);
    }
    (index, CacheOutcome::Rebuilt)
}

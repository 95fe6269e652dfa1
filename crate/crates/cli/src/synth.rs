//! Synthetic sentiment benchmark generator.
//!
//! Produces a two-class corpus with planted keyword structure plus matching
//! embedding, POS-lexicon, and stopword files, so the full pipeline can be
//! exercised end to end without external data:
//!
//! - each class owns a few keyword clusters; a document carries canonical
//!   keywords of its own class padded with filler stopwords;
//! - each cluster's synonyms are planted into *opposite*-class training
//!   documents, so swapping a canonical keyword for one of its synonyms both
//!   removes own-class evidence and adds opposite-class evidence;
//! - cluster members share a nearby embedding direction, so the synonym
//!   index recovers exactly the planted clusters;
//! - fillers are stopwords without embeddings, leaving only keywords
//!   eligible for substitution.
//!
//! A bag-of-words model trained on this corpus is near-perfect on clean test
//! documents yet reliably flips once a majority of a document's keywords are
//! replaced by their planted synonyms.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct ToyConfig {
    pub train_docs: usize,
    pub test_docs: usize,
    pub clusters_per_class: usize,
    pub synonyms_per_cluster: usize,
    /// Canonical keywords per document.
    pub keywords_per_doc: usize,
    /// Opposite-class synonyms planted per *training* document.
    pub planted_per_doc: usize,
    /// Filler stopwords per document.
    pub filler_count: usize,
}

impl Default for ToyConfig {
    fn default() -> ToyConfig {
        ToyConfig {
            train_docs: 500,
            test_docs: 250,
            clusters_per_class: 4,
            synonyms_per_cluster: 6,
            keywords_per_doc: 3,
            planted_per_doc: 4,
            filler_count: 17,
        }
    }
}

/// A generated corpus plus the lexicon files it needs, all as in-memory
/// text in the formats the loaders expect.
#[derive(Debug, Clone)]
pub struct ToyBundle {
    pub train: Vec<(String, usize)>,
    pub test: Vec<(String, usize)>,
    pub embeddings: String,
    pub pos_lexicon: String,
    pub stopwords: String,
}

const FILLERS: &[&str] = &[
    "the", "a", "an", "of", "to", "in", "on", "is", "was", "it", "for", "with", "as", "at",
    "by", "this", "that", "and", "or", "but",
];

fn canonical(class: usize, cluster: usize) -> String {
    let stem = if class == 1 { "pos" } else { "neg" };
    format!("{stem}{cluster}")
}

fn synonym(class: usize, cluster: usize, j: usize) -> String {
    let letter = (b'a' + j as u8) as char;
    format!("{}{letter}", canonical(class, cluster))
}

fn tag(class: usize) -> &'static str {
    // one coarse tag per class keeps the POS filter from mixing classes
    if class == 1 {
        "ADJ"
    } else {
        "NOUN"
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in v {
        *x /= norm;
    }
}

/// Unit vector for a cluster member. Canonicals sit on one basis axis per
/// cluster; each cluster's synonyms tilt into a dedicated off-axis
/// dimension. Deviations of different clusters are therefore orthogonal:
/// substituting at one position can never compensate the similarity loss at
/// another, so restoring a substitution always weakly raises similarity.
fn vector(cfg: &ToyConfig, class: usize, cluster: usize, member: Option<usize>) -> Vec<f64> {
    let global_clusters = 2 * cfg.clusters_per_class;
    let base = class * cfg.clusters_per_class + cluster;
    let mut v = vec![0.0; 2 * global_clusters];
    v[base] = 1.0;
    if let Some(j) = member {
        v[global_clusters + base] += 0.08 * (j + 1) as f64;
        normalize(&mut v);
    }
    v
}

fn doc(
    cfg: &ToyConfig,
    class: usize,
    planted: bool,
    opposite_pool: &[String],
    rng: &mut ChaCha8Rng,
) -> String {
    let mut words: Vec<String> = Vec::new();
    let mut clusters: Vec<usize> = (0..cfg.clusters_per_class).collect();
    clusters.shuffle(rng);
    for &c in clusters.iter().take(cfg.keywords_per_doc) {
        words.push(canonical(class, c));
    }
    if planted {
        for _ in 0..cfg.planted_per_doc {
            words.push(opposite_pool.choose(rng).unwrap().clone());
        }
    }
    for _ in 0..cfg.filler_count {
        words.push(FILLERS.choose(rng).unwrap().to_string());
    }
    words.shuffle(rng);
    words.join(" ")
}

pub fn generate(cfg: &ToyConfig, seed: u64) -> ToyBundle {
    assert!(cfg.keywords_per_doc <= cfg.clusters_per_class);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut embeddings = String::new();
    let mut pos_lexicon = String::new();
    // synonym pools per class, planted into the other class's documents
    let mut pools: [Vec<String>; 2] = [Vec::new(), Vec::new()];
    for class in 0..2 {
        for cluster in 0..cfg.clusters_per_class {
            let mut emit = |word: &str, v: &[f64]| {
                let _ = write!(embeddings, "{word}");
                for x in v {
                    let _ = write!(embeddings, " {x:.8}");
                }
                embeddings.push('\n');
                let _ = writeln!(pos_lexicon, "{word}\t{}", tag(class));
            };
            emit(&canonical(class, cluster), &vector(cfg, class, cluster, None));
            for j in 0..cfg.synonyms_per_cluster {
                let word = synonym(class, cluster, j);
                emit(&word, &vector(cfg, class, cluster, Some(j)));
                pools[class].push(word);
            }
        }
    }
    let stopwords = FILLERS.join("\n") + "\n";

    let mut make_split = |count: usize, planted: bool| -> Vec<(String, usize)> {
        (0..count)
            .map(|_| {
                let class = rng.random_range(0..2);
                (doc(cfg, class, planted, &pools[1 - class], &mut rng), class)
            })
            .collect()
    };
    let train = make_split(cfg.train_docs, true);
    let test = make_split(cfg.test_docs, false);

    ToyBundle {
        train,
        test,
        embeddings,
        pos_lexicon,
        stopwords,
    }
}

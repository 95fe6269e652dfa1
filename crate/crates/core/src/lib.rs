//! Hard-label black-box adversarial attacks on text classifiers.
//!
//! The attacker sees only the top-1 label of the target model. An attack
//! proceeds in three phases: random synonym initialisation pushes the input
//! across the decision boundary, search-space reduction rolls back
//! substitutions that are not needed to stay there, and a genetic algorithm
//! maximises semantic similarity to the original text while the adversarial
//! criterion keeps holding.
//!
//! This crate is `no_std` + `alloc`; everything that touches files, sockets
//! or threads lives in the companion CLI crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod attack;
pub mod lexicon;
pub mod oracle;
pub mod similarity;
pub mod text;

pub use attack::{
    attack, crossover, initialize, mutate, optimize, reduce_search_space, select_parents,
    AttackConfig, AttackContext, AttackError, AttackResult, AttackStatus, Candidate,
    QueryBreakdown,
};
pub use lexicon::{build_synonym_index, cosine, EmbeddingTable, SynonymIndex};
pub use oracle::{
    adversarial_criterion, predict, train_bow, BowClassifier, BowVariant, HardLabelOracle,
    OracleError, QueryLedger,
};
pub use similarity::{sim, MeanEncoder, SentenceEncoder, SimError};
pub use text::{Lexicon, Pos, Token, TokenizedText};

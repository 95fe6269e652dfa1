//! The three-phase hard-label attack.
//!
//! Phase 1 (initialisation) substitutes random synonyms at randomly sampled
//! positions until the oracle's label flips. Phase 2 (search-space reduction)
//! rolls unnecessary substitutions back to the original words while the flip
//! holds. Phase 3 runs a genetic algorithm whose fitness is semantic
//! similarity to the original text; candidates that stop being adversarial
//! are discarded outright.
//!
//! Every stochastic choice — position sampling, synonym sampling, softmax
//! parent draws, crossover coin flips, mutation-index draws — consumes from
//! one caller-supplied RNG in a fixed order, so a (input, config, seed,
//! oracle) tuple fully determines the result.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::lexicon::SynonymIndex;
use crate::oracle::{predict, HardLabelOracle, OracleError, QueryLedger};
use crate::similarity::{sim, SentenceEncoder, SimError};
use crate::text::{Lexicon, TokenizedText};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AttackError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("population has fewer than two members")]
    DegeneratePopulation,
    #[error("crossover parents have different lengths")]
    LengthMismatch,
    #[error("oracle returned a different label for a previously adversarial text")]
    NondeterministicOracle,
}

impl AttackError {
    fn is_budget(&self) -> bool {
        matches!(self, AttackError::Oracle(OracleError::BudgetExhausted))
    }
}

/// Attack hyper-parameters. Defaults follow the reference configuration:
/// population 30, per-index mutation cap 25, 100 GA iterations, 30%
/// initialisation fraction, top-50 synonyms.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackConfig {
    /// K: population size.
    pub population_size: usize,
    /// lambda: how many times one index may be mutated.
    pub mutation_cap: u32,
    /// T: maximum GA iterations.
    pub max_iterations: usize,
    /// Fraction of the input's words tried during initialisation.
    pub init_fraction: f64,
    /// k: synonym-list length used when building the index.
    pub synonym_count: usize,
    /// Successful attacks above this perturbation rate are filtered from
    /// reported averages and counted as failures.
    pub max_pert_report: f64,
    pub rng_seed: u64,
    /// Whether one member may be drawn as both parents.
    pub allow_self_pairing: bool,
    /// Ablation switch: skip search-space reduction.
    pub enable_reduction: bool,
    /// Ablation switch: skip the genetic optimisation.
    pub enable_ga: bool,
}

impl Default for AttackConfig {
    fn default() -> AttackConfig {
        AttackConfig {
            population_size: 30,
            mutation_cap: 25,
            max_iterations: 100,
            init_fraction: 0.30,
            synonym_count: 50,
            max_pert_report: 0.25,
            rng_seed: 0,
            allow_self_pairing: true,
            enable_reduction: true,
            enable_ga: true,
        }
    }
}

/// A variant of the original input plus its cached fitness and verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub text: TokenizedText,
    /// Positions where the word differs from the original.
    pub substituted: BTreeSet<usize>,
    /// Cached Sim(original, text) under the configured encoder.
    pub fitness: f64,
    pub adversarial: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AttackStatus {
    Success,
    InitFailed,
    BudgetExhausted,
}

/// Oracle calls per phase. The initial label check is counted under `init`
/// and the final verification under `ga`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryBreakdown {
    pub init: u64,
    pub reduce: u64,
    pub ga: u64,
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackResult {
    pub status: AttackStatus,
    pub adversarial_text: Option<String>,
    pub adv_label: Option<usize>,
    /// Substituted words over all words of the input.
    pub perturbation_rate: Option<f64>,
    pub similarity: Option<f64>,
    pub queries: QueryBreakdown,
    pub iterations_used: usize,
}

/// Everything an attack phase needs, shared read-only except the ledger.
/// Phase query accounting assumes the ledger is exclusive to this attack.
pub struct AttackContext<'a> {
    pub original: &'a TokenizedText,
    /// For entailment-style inputs: passed to the oracle verbatim, never
    /// perturbed, and excluded from similarity scoring.
    pub premise: Option<&'a str>,
    pub orig_label: usize,
    pub oracle: &'a dyn HardLabelOracle,
    pub ledger: &'a QueryLedger,
    pub encoder: &'a dyn SentenceEncoder,
    pub index: &'a SynonymIndex,
    pub lexicon: &'a Lexicon,
    pub cfg: &'a AttackConfig,
}

impl AttackContext<'_> {
    /// The string actually shown to the oracle.
    pub fn oracle_text(&self, text: &TokenizedText) -> String {
        match self.premise {
            Some(premise) => {
                let mut s = String::from(premise);
                s.push(' ');
                s.push_str(&text.detokenize());
                s
            }
            None => text.detokenize(),
        }
    }

    /// One criterion check: one query, true iff the label flipped.
    pub fn is_adversarial(&self, text: &TokenizedText) -> Result<bool, AttackError> {
        let label = predict(self.oracle, &self.oracle_text(text), self.ledger)?;
        Ok(label != self.orig_label)
    }

    pub fn fitness_of(&self, text: &TokenizedText) -> Result<f64, AttackError> {
        Ok(sim(self.original, text, self.encoder)?)
    }

    /// POS-filtered synonym set of the *original* word at `idx`; every
    /// substitution the attack ever makes at `idx` comes from this list.
    pub fn synonyms_at(&self, idx: usize) -> Vec<&str> {
        let token = &self.original.tokens[idx];
        self.index
            .synonyms_for(&token.surface, token.pos, self.lexicon)
    }

    /// Non-stopword positions with a non-empty synonym set.
    pub fn eligible_positions(&self) -> Vec<usize> {
        (0..self.original.len())
            .filter(|&p| !self.original.tokens[p].is_stopword && !self.synonyms_at(p).is_empty())
            .collect()
    }

    fn make_candidate(
        &self,
        text: TokenizedText,
        substituted: BTreeSet<usize>,
    ) -> Result<Candidate, AttackError> {
        let fitness = self.fitness_of(&text)?;
        Ok(Candidate {
            text,
            substituted,
            fitness,
            adversarial: true,
        })
    }
}

/// Computes and caches the candidate's fitness.
pub fn fitness(ctx: &AttackContext<'_>, cand: &mut Candidate) -> Result<f64, AttackError> {
    let f = ctx.fitness_of(&cand.text)?;
    cand.fitness = f;
    Ok(f)
}

/// Phase 1: random synonym substitution at sampled positions until the label
/// flips. `Ok(None)` means no adversarial sample was found within the
/// fraction cap.
pub fn initialize<R: Rng>(
    ctx: &AttackContext<'_>,
    rng: &mut R,
) -> Result<Option<Candidate>, AttackError> {
    let mut eligible = ctx.eligible_positions();
    if eligible.is_empty() {
        return Ok(None);
    }
    // budget = 30% of all words, sampled over eligible positions only
    let quota = libm::ceil(ctx.cfg.init_fraction * ctx.original.len() as f64) as usize;
    let count = quota.min(eligible.len()).max(1);
    // partial Fisher-Yates: first `count` entries are a uniform sample
    // without replacement, in sampled order
    for i in 0..count {
        let j = rng.random_range(i..eligible.len());
        eligible.swap(i, j);
    }

    let mut current = ctx.original.clone();
    let mut substituted = BTreeSet::new();
    for &p in &eligible[..count] {
        let synonyms = ctx.synonyms_at(p);
        let choice = synonyms[rng.random_range(0..synonyms.len())];
        current = current.with_word(p, choice, ctx.lexicon);
        substituted.insert(p);
        if ctx.is_adversarial(&current)? {
            return Ok(Some(ctx.make_candidate(current, substituted)?));
        }
    }
    Ok(None)
}

/// Phase 2: try restoring each substituted word on its own; keep the
/// restorations that preserve the flip, apply them in descending similarity
/// order, and stop before the first one that would break the criterion.
///
/// The returned flag is true when the query budget ran out mid-phase; the
/// candidate returned alongside is still adversarial.
pub fn reduce_search_space(
    ctx: &AttackContext<'_>,
    cand: &Candidate,
) -> Result<(Candidate, bool), AttackError> {
    debug_assert!(cand.adversarial);
    let mut scored: Vec<(f64, usize)> = Vec::new();
    for &i in &cand.substituted {
        let restored = cand
            .text
            .with_word(i, ctx.original.word(i), ctx.lexicon);
        match ctx.is_adversarial(&restored) {
            Ok(true) => scored.push((ctx.fitness_of(&restored)?, i)),
            Ok(false) => {}
            Err(e) if e.is_budget() => return Ok((cand.clone(), true)),
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| {
        b.0.partial_cmp(&a.0)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
    });

    let mut current = cand.clone();
    for (_, i) in scored {
        let trial = current
            .text
            .with_word(i, ctx.original.word(i), ctx.lexicon);
        match ctx.is_adversarial(&trial) {
            Ok(true) => {
                current.text = trial;
                current.substituted.remove(&i);
            }
            Ok(false) => break,
            Err(e) if e.is_budget() => {
                fitness(ctx, &mut current)?;
                return Ok((current, true));
            }
            Err(e) => return Err(e),
        }
    }
    fitness(ctx, &mut current)?;
    Ok((current, false))
}

/// One mutation at `idx`: restore the original word if that keeps the flip
/// (restoration is terminal for the index); otherwise scan the whole synonym
/// set, keep adversarial replacements whose similarity is at least the
/// candidate's, and return the argmax. Ties break toward the earlier synonym
/// list entry. With no survivor the candidate comes back unchanged.
pub fn mutate(
    ctx: &AttackContext<'_>,
    cand: &Candidate,
    idx: usize,
) -> Result<Candidate, AttackError> {
    debug_assert!(cand.adversarial);
    let restored = cand
        .text
        .with_word(idx, ctx.original.word(idx), ctx.lexicon);
    if ctx.is_adversarial(&restored)? {
        let mut substituted = cand.substituted.clone();
        substituted.remove(&idx);
        return ctx.make_candidate(restored, substituted);
    }

    let mut best: Option<(f64, &str)> = None;
    for synonym in ctx.synonyms_at(idx) {
        let trial = cand.text.with_word(idx, synonym, ctx.lexicon);
        if !ctx.is_adversarial(&trial)? {
            continue;
        }
        let f = ctx.fitness_of(&trial)?;
        if f >= cand.fitness && best.map_or(true, |(bf, _)| f > bf) {
            best = Some((f, synonym));
        }
    }
    match best {
        Some((f, synonym)) => {
            let text = cand.text.with_word(idx, synonym, ctx.lexicon);
            let mut substituted = cand.substituted.clone();
            substituted.insert(idx);
            Ok(Candidate {
                text,
                substituted,
                fitness: f,
                adversarial: true,
            })
        }
        None => Ok(cand.clone()),
    }
}

/// Two independent draws from the softmax distribution over member fitness.
/// Returns member indices; with `allow_self_pairing` off, the second draw is
/// repeated until it differs from the first.
pub fn select_parents<R: Rng>(
    members: &[Candidate],
    allow_self_pairing: bool,
    rng: &mut R,
) -> Result<(usize, usize), AttackError> {
    if members.len() < 2 {
        return Err(AttackError::DegeneratePopulation);
    }
    let z_max = members
        .iter()
        .map(|c| c.fitness)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = members
        .iter()
        .map(|c| libm::exp(c.fitness - z_max))
        .collect();
    let total: f64 = weights.iter().sum();
    let draw = |rng: &mut R| -> usize {
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            u -= w;
            if u <= 0.0 {
                return i;
            }
        }
        members.len() - 1
    };
    let p = draw(rng);
    let mut q = draw(rng);
    if !allow_self_pairing {
        while q == p {
            q = draw(rng);
        }
    }
    Ok((p, q))
}

/// Uniform per-position mix of the two parents. Fitness and the adversarial
/// verdict of the child are left for the caller to evaluate.
pub fn crossover<R: Rng>(
    original: &TokenizedText,
    cp: &Candidate,
    cq: &Candidate,
    rng: &mut R,
) -> Result<(TokenizedText, BTreeSet<usize>), AttackError> {
    if cp.text.len() != cq.text.len() || cp.text.len() != original.len() {
        return Err(AttackError::LengthMismatch);
    }
    let mut tokens = Vec::with_capacity(original.len());
    let mut substituted = BTreeSet::new();
    for i in 0..original.len() {
        let from_p = rng.random_bool(0.5);
        let token = if from_p {
            cp.text.tokens[i].clone()
        } else {
            cq.text.tokens[i].clone()
        };
        if token.surface != original.tokens[i].surface {
            substituted.insert(i);
        }
        tokens.push(token);
    }
    let mut text = TokenizedText {
        tokens,
        raw: String::new(),
    };
    text.raw = text.detokenize();
    Ok((text, substituted))
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub best: Candidate,
    pub iterations: usize,
    pub budget_exhausted: bool,
}

/// Index of the highest-fitness member, ties toward the earliest.
fn argmax_fitness(members: &[Candidate]) -> usize {
    let mut best = 0;
    for (i, c) in members.iter().enumerate().skip(1) {
        if c.fitness > members[best].fitness {
            best = i;
        }
    }
    best
}

/// Phase 3: genetic optimisation of similarity subject to the criterion.
///
/// The initial population is one mutation of `xstar` per substituted index
/// (capped at the K fittest). Each iteration carries the elite over
/// unchanged, draws one parent pair by softmax selection, produces K-1
/// crossover children, discards children that lose the flip or fall below
/// the elite's fitness, and mutates each survivor at one sampled index that
/// is neither restored nor mutation-capped. The loop ends after T
/// iterations, or earlier once every substituted index in the elite is
/// restored or capped.
pub fn optimize<R: Rng>(
    ctx: &AttackContext<'_>,
    xstar: &Candidate,
    rng: &mut R,
) -> Result<OptimizeOutcome, AttackError> {
    debug_assert!(xstar.adversarial);
    let cfg = ctx.cfg;
    let pos: Vec<usize> = xstar.substituted.iter().copied().collect();
    let mut counts: BTreeMap<usize, u32> = pos.iter().map(|&i| (i, 0)).collect();
    let mut budget_exhausted = false;

    let is_done = |elite: &Candidate, counts: &BTreeMap<usize, u32>| {
        pos.iter().all(|&i| {
            elite.text.word(i) == ctx.original.word(i) || counts[&i] >= cfg.mutation_cap
        })
    };

    // one mutation per substituted index seeds the population
    let mut population: Vec<Candidate> = Vec::new();
    for &idx in &pos {
        if counts[&idx] >= cfg.mutation_cap {
            continue;
        }
        *counts.get_mut(&idx).unwrap() += 1;
        match mutate(ctx, xstar, idx) {
            Ok(c) => population.push(c),
            Err(e) if e.is_budget() => {
                budget_exhausted = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if population.is_empty() {
        population.push(xstar.clone());
    }
    if population.len() > cfg.population_size {
        population.sort_by(|a, b| {
            b.fitness
                .partial_cmp(&a.fitness)
                .unwrap_or(core::cmp::Ordering::Equal)
        });
        population.truncate(cfg.population_size);
    }

    let mut elite = population[argmax_fitness(&population)].clone();
    let mut iterations = 0;

    // fresh mutations of the elite at sampled open indices; used to seed an
    // iteration when every child was filtered out
    let refill = |elite: &Candidate,
                  counts: &mut BTreeMap<usize, u32>,
                  rng: &mut R,
                  budget_exhausted: &mut bool|
     -> Result<Vec<Candidate>, AttackError> {
        let mut open: Vec<usize> = pos
            .iter()
            .copied()
            .filter(|&i| {
                elite.text.word(i) != ctx.original.word(i) && counts[&i] < cfg.mutation_cap
            })
            .collect();
        let take = open.len().min(cfg.population_size.saturating_sub(1));
        for i in 0..take {
            let j = rng.random_range(i..open.len());
            open.swap(i, j);
        }
        let mut out = Vec::new();
        for &idx in &open[..take] {
            *counts.get_mut(&idx).unwrap() += 1;
            match mutate(ctx, elite, idx) {
                Ok(c) => out.push(c),
                Err(e) if e.is_budget() => {
                    *budget_exhausted = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    };

    'outer: while iterations < cfg.max_iterations && !budget_exhausted {
        if is_done(&elite, &counts) {
            break;
        }
        if population.len() < 2 {
            let extra = refill(&elite, &mut counts, rng, &mut budget_exhausted)?;
            population.extend(extra);
            if population.len() < 2 {
                break;
            }
        }

        let (p, q) = select_parents(&population, cfg.allow_self_pairing, rng)?;
        let mut survivors: Vec<Candidate> = Vec::new();
        for _ in 0..cfg.population_size.saturating_sub(1) {
            let (text, substituted) = crossover(ctx.original, &population[p], &population[q], rng)?;
            match ctx.is_adversarial(&text) {
                Ok(true) => {}
                Ok(false) => continue,
                Err(e) if e.is_budget() => {
                    budget_exhausted = true;
                    break 'outer;
                }
                Err(e) => return Err(e),
            }
            let f = ctx.fitness_of(&text)?;
            if f < elite.fitness {
                continue;
            }
            survivors.push(Candidate {
                text,
                substituted,
                fitness: f,
                adversarial: true,
            });
        }

        let mut next: Vec<Candidate> = Vec::new();
        for child in survivors {
            let idx = pos[rng.random_range(0..pos.len())];
            let open =
                child.text.word(idx) != ctx.original.word(idx) && counts[&idx] < cfg.mutation_cap;
            if open {
                *counts.get_mut(&idx).unwrap() += 1;
                match mutate(ctx, &child, idx) {
                    Ok(c) => next.push(c),
                    Err(e) if e.is_budget() => {
                        budget_exhausted = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            } else {
                next.push(child);
            }
        }
        if next.is_empty() && !budget_exhausted {
            next = refill(&elite, &mut counts, rng, &mut budget_exhausted)?;
        }

        let mut new_population = Vec::with_capacity(next.len() + 1);
        new_population.push(elite.clone());
        new_population.extend(next);
        population = new_population;
        elite = population[argmax_fitness(&population)].clone();
        iterations += 1;
    }

    Ok(OptimizeOutcome {
        best: elite,
        iterations,
        budget_exhausted,
    })
}

/// End-to-end attack on one input: tokenize, verify the original label,
/// initialise, reduce, optimise, re-verify. Phase failures and budget
/// exhaustion are encoded in the result status, never raised.
#[allow(clippy::too_many_arguments)]
pub fn attack<R: Rng>(
    raw: &str,
    premise: Option<&str>,
    orig_label: usize,
    oracle: &dyn HardLabelOracle,
    ledger: &QueryLedger,
    encoder: &dyn SentenceEncoder,
    index: &SynonymIndex,
    lexicon: &Lexicon,
    cfg: &AttackConfig,
    rng: &mut R,
) -> Result<AttackResult, AttackError> {
    let original = lexicon.tokenize(raw);
    let ctx = AttackContext {
        original: &original,
        premise,
        orig_label,
        oracle,
        ledger,
        encoder,
        index,
        lexicon,
        cfg,
    };

    let start = ledger.total();
    let mut queries = QueryBreakdown::default();
    let finish = |mut queries: QueryBreakdown| {
        queries.total = queries.init + queries.reduce + queries.ga;
        queries
    };

    // initial label check (counted under init)
    let initial_label = match predict(oracle, &ctx.oracle_text(&original), ledger) {
        Ok(label) => label,
        Err(OracleError::BudgetExhausted) => {
            return Ok(AttackResult {
                status: AttackStatus::BudgetExhausted,
                adversarial_text: None,
                adv_label: None,
                perturbation_rate: None,
                similarity: None,
                queries: finish(queries),
                iterations_used: 0,
            })
        }
        Err(e) => return Err(e.into()),
    };
    if initial_label != orig_label {
        // already misclassified: trivial success, zero perturbation
        queries.init = ledger.total() - start;
        return Ok(AttackResult {
            status: AttackStatus::Success,
            adversarial_text: Some(String::from(raw)),
            adv_label: Some(initial_label),
            perturbation_rate: Some(0.0),
            similarity: Some(1.0),
            queries: finish(queries),
            iterations_used: 0,
        });
    }

    let init_result = initialize(&ctx, rng);
    queries.init = ledger.total() - start;
    let initialized = match init_result {
        Ok(Some(c)) => c,
        Ok(None) => {
            return Ok(AttackResult {
                status: AttackStatus::InitFailed,
                adversarial_text: None,
                adv_label: None,
                perturbation_rate: None,
                similarity: None,
                queries: finish(queries),
                iterations_used: 0,
            })
        }
        Err(e) if e.is_budget() => {
            return Ok(AttackResult {
                status: AttackStatus::BudgetExhausted,
                adversarial_text: None,
                adv_label: None,
                perturbation_rate: None,
                similarity: None,
                queries: finish(queries),
                iterations_used: 0,
            })
        }
        Err(e) => return Err(e),
    };

    let mut budget_hit = false;
    let reduce_start = ledger.total();
    let reduced = if cfg.enable_reduction {
        let (cand, hit) = reduce_search_space(&ctx, &initialized)?;
        budget_hit |= hit;
        cand
    } else {
        initialized
    };
    queries.reduce = ledger.total() - reduce_start;

    let ga_start = ledger.total();
    let (best, iterations) = if cfg.enable_ga && !budget_hit {
        let outcome = optimize(&ctx, &reduced, rng)?;
        budget_hit |= outcome.budget_exhausted;
        (outcome.best, outcome.iterations)
    } else {
        (reduced, 0)
    };

    // final verification query
    let mut adv_label = None;
    if !budget_hit {
        match predict(oracle, &ctx.oracle_text(&best.text), ledger) {
            Ok(label) => {
                if label == orig_label {
                    return Err(AttackError::NondeterministicOracle);
                }
                adv_label = Some(label);
            }
            Err(OracleError::BudgetExhausted) => budget_hit = true,
            Err(e) => return Err(e.into()),
        }
    }
    queries.ga = ledger.total() - ga_start;

    let n = original.len().max(1) as f64;
    Ok(AttackResult {
        status: if budget_hit {
            AttackStatus::BudgetExhausted
        } else {
            AttackStatus::Success
        },
        adversarial_text: Some(best.text.detokenize()),
        adv_label,
        perturbation_rate: Some(best.substituted.len() as f64 / n),
        similarity: Some(best.fitness),
        queries: finish(queries),
        iterations_used: iterations,
    })
}

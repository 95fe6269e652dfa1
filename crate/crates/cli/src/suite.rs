//! Batch attack execution and metric aggregation.

use crate::dataset::{Dataset, Example};
use crate::encoder::GrammarClient;
use hardlabel::{
    attack, AttackConfig, AttackStatus, HardLabelOracle, Lexicon, QueryBreakdown, QueryLedger,
    SentenceEncoder, SynonymIndex,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    /// Attack produced a verified adversarial example.
    Success,
    /// Oracle got the example wrong before any perturbation; counted as a
    /// trivial success for after-attack accuracy, never attacked.
    Misclassified,
    InitFailed,
    BudgetExhausted,
    Errored,
}

/// One line of the results JSONL. For entailment tasks the text fields hold
/// the oracle-visible premise+hypothesis concatenation, so records are
/// self-contained for transfer evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub id: usize,
    pub status: RecordStatus,
    pub orig_label: usize,
    pub adv_label: Option<usize>,
    pub orig_text: String,
    pub adv_text: Option<String>,
    pub perturbation_rate: Option<f64>,
    pub similarity: Option<f64>,
    pub queries: QueryBreakdown,
    pub iterations: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Suite-level metrics. Averages cover only successful attacks that survive
/// the perturbation filter; filtered successes count as failures for
/// after-attack accuracy. Errored examples are excluded from every rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    pub examples: usize,
    pub errored: usize,
    /// Originally-correct examples, i.e. the number of attacks attempted.
    /// `success_rate` is reported as 1.0 when this is zero.
    pub attacked: usize,
    pub original_accuracy: f64,
    pub after_attack_accuracy: f64,
    pub success_rate: f64,
    /// Successes dropped from averages (and counted as failures) because
    /// their perturbation rate exceeds `max_pert_filter`.
    pub filtered_out: usize,
    pub max_pert_filter: f64,
    pub avg_perturbation: Option<f64>,
    pub avg_similarity: Option<f64>,
    pub total_queries: u64,
    /// Mean grammar-error increase of adversarial texts; present only when
    /// an external grammar checker is configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammar_error_increase: Option<f64>,
    pub per_example: Vec<ExampleRecord>,
}

pub struct SuiteContext<'a> {
    pub oracle: &'a dyn HardLabelOracle,
    pub encoder: &'a dyn SentenceEncoder,
    pub index: &'a SynonymIndex,
    pub lexicon: &'a Lexicon,
    pub cfg: &'a AttackConfig,
    /// Per-example oracle query budget.
    pub budget: Option<u64>,
    pub parallelism: usize,
    pub grammar: Option<&'a GrammarClient>,
}

fn oracle_text(premise: Option<&str>, text: &str) -> String {
    match premise {
        Some(p) => format!("{p} {text}"),
        None => text.to_owned(),
    }
}

fn run_example(id: usize, example: &Example, ctx: &SuiteContext<'_>) -> ExampleRecord {
    let seed = ctx.cfg.rng_seed ^ id as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ledger = match ctx.budget {
        Some(b) => QueryLedger::with_budget(b),
        None => QueryLedger::unlimited(),
    };
    let mut cfg = ctx.cfg.clone();
    cfg.rng_seed = seed;

    let premise = example.premise.as_deref();
    let orig_text = oracle_text(premise, &example.text);
    let mut record = ExampleRecord {
        id,
        status: RecordStatus::Errored,
        orig_label: example.label,
        adv_label: None,
        orig_text,
        adv_text: None,
        perturbation_rate: None,
        similarity: None,
        queries: QueryBreakdown::default(),
        iterations: 0,
        seed,
        error: None,
    };

    match attack(
        &example.text,
        premise,
        example.label,
        ctx.oracle,
        &ledger,
        ctx.encoder,
        ctx.index,
        ctx.lexicon,
        &cfg,
        &mut rng,
    ) {
        Ok(result) => {
            record.status = match result.status {
                // zero perturbation means the very first prediction already
                // differed from the dataset label
                AttackStatus::Success if result.perturbation_rate == Some(0.0) => {
                    RecordStatus::Misclassified
                }
                AttackStatus::Success => RecordStatus::Success,
                AttackStatus::InitFailed => RecordStatus::InitFailed,
                AttackStatus::BudgetExhausted => RecordStatus::BudgetExhausted,
            };
            record.adv_label = result.adv_label;
            record.adv_text = result
                .adversarial_text
                .as_deref()
                .map(|t| oracle_text(premise, t));
            record.perturbation_rate = result.perturbation_rate;
            record.similarity = result.similarity;
            record.queries = result.queries;
            record.iterations = result.iterations_used;
        }
        Err(e) => {
            record.error = Some(e.to_string());
            // phase breakdown is unknown mid-error; only the ledger total is
            record.queries.total = ledger.total();
        }
    }
    record
}

/// Attacks every example, `parallelism` workers wide. Records come back
/// sorted by id, so output files are bit-identical for a fixed seed
/// regardless of worker count.
pub fn run_suite(dataset: &Dataset, ctx: &SuiteContext<'_>) -> SuiteMetrics {
    let n = dataset.examples.len();
    let cursor = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<ExampleRecord>>> = Mutex::new(vec![None; n]);

    let workers = ctx.parallelism.max(1).min(n.max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let id = cursor.fetch_add(1, Ordering::Relaxed);
                if id >= n {
                    break;
                }
                let record = run_example(id, &dataset.examples[id], ctx);
                slots.lock().unwrap()[id] = Some(record);
            });
        }
    });

    let records: Vec<ExampleRecord> = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect();

    let mut metrics = aggregate(&records, ctx.cfg.max_pert_report);
    if let Some(grammar) = ctx.grammar {
        metrics.grammar_error_increase = grammar_increase(&records, grammar, metrics.max_pert_filter);
    }
    metrics
}

fn grammar_increase(
    records: &[ExampleRecord],
    grammar: &GrammarClient,
    max_pert: f64,
) -> Option<f64> {
    let mut deltas = Vec::new();
    for r in records {
        let kept = r.status == RecordStatus::Success
            && r.perturbation_rate.is_some_and(|p| p <= max_pert);
        if !kept {
            continue;
        }
        let adv = r.adv_text.as_deref()?;
        let before = grammar.check(&r.orig_text).ok()?;
        let after = grammar.check(adv).ok()?;
        deltas.push(after as f64 - before as f64);
    }
    if deltas.is_empty() {
        None
    } else {
        Some(deltas.iter().sum::<f64>() / deltas.len() as f64)
    }
}

/// Computes suite metrics from per-example records; also how `report`
/// rebuilds metrics from a results file.
pub fn aggregate(records: &[ExampleRecord], max_pert: f64) -> SuiteMetrics {
    let examples = records.len();
    let errored = records
        .iter()
        .filter(|r| r.status == RecordStatus::Errored)
        .count();
    let scored = examples - errored;
    let misclassified = records
        .iter()
        .filter(|r| r.status == RecordStatus::Misclassified)
        .count();
    let attacked = scored - misclassified;
    let successes: Vec<&ExampleRecord> = records
        .iter()
        .filter(|r| r.status == RecordStatus::Success)
        .collect();
    let kept: Vec<&ExampleRecord> = successes
        .iter()
        .copied()
        .filter(|r| r.perturbation_rate.is_some_and(|p| p <= max_pert))
        .collect();
    let filtered_out = successes.len() - kept.len();

    let frac = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mean = |values: Vec<f64>| {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };

    SuiteMetrics {
        examples,
        errored,
        attacked,
        original_accuracy: frac(attacked, scored),
        after_attack_accuracy: frac(attacked - kept.len(), scored),
        success_rate: if attacked == 0 {
            1.0
        } else {
            kept.len() as f64 / attacked as f64
        },
        filtered_out,
        max_pert_filter: max_pert,
        avg_perturbation: mean(kept.iter().filter_map(|r| r.perturbation_rate).collect()),
        avg_similarity: mean(kept.iter().filter_map(|r| r.similarity).collect()),
        total_queries: records.iter().map(|r| r.queries.total).sum(),
        grammar_error_increase: None,
        per_example: records.to_vec(),
    }
}

/// Writes records as JSONL, sorted by id.
pub fn write_records(path: &Path, records: &[ExampleRecord]) -> std::io::Result<()> {
    let mut sorted: Vec<&ExampleRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.id);
    let mut out = BufWriter::new(fs::File::create(path)?);
    for record in sorted {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_records(path: &Path) -> anyhow::Result<Vec<ExampleRecord>> {
    let data = fs::read_to_string(path)?;
    data.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| Ok(serde_json::from_str(l)?))
        .collect()
}

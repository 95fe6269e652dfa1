use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use hardlabel::{
    train_bow, AttackConfig, BowVariant, HardLabelOracle, MeanEncoder, SentenceEncoder,
};
use hardlabel_cli::dataset::{label_count, load_dataset, Format, TaskKind};
use hardlabel_cli::encoder::{ExternalEncoder, GrammarClient};
use hardlabel_cli::report::{emit_report, ReportFormat};
use hardlabel_cli::suite::{read_records, run_suite, write_records, SuiteContext};
use hardlabel_cli::synth::{generate, ToyConfig};
use hardlabel_cli::transfer::transfer_accuracy;
use hardlabel_cli::{cache, files, RemoteOracle};
use std::path::{Path, PathBuf};
use std::time::Duration;

#[derive(Parser)]
#[command(name = "attack", about = "Hard-label adversarial attacks on text classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack every example of a dataset and write per-example results.
    Run(RunArgs),
    /// Train a bag-of-words classifier and save it as JSON.
    TrainBow(TrainArgs),
    /// Evaluate another oracle on previously generated adversarial texts.
    Transfer(TransferArgs),
    /// Recompute and print suite metrics from a results file.
    Report(ReportArgs),
    /// Generate the synthetic benchmark corpus and its lexicon files.
    Synth(SynthArgs),
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long, value_enum, default_value = "classification")]
    task: TaskKind,
    /// `bow:PATH` for a saved bag-of-words model or an http(s) URL.
    #[arg(long)]
    oracle: String,
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    pos_lexicon: PathBuf,
    #[arg(long)]
    stopwords: PathBuf,
    /// Population size.
    #[arg(short = 'K', long = "population", default_value_t = 30)]
    population: usize,
    /// Per-index mutation cap.
    #[arg(long, default_value_t = 25)]
    lambda: u32,
    /// Maximum optimisation iterations.
    #[arg(short = 'T', long = "iterations", default_value_t = 100)]
    iterations: usize,
    /// Fraction of the input's words tried during initialisation.
    #[arg(long, default_value_t = 0.3)]
    init_fraction: f64,
    /// Synonym-list length per word.
    #[arg(long, default_value_t = 50)]
    synonyms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-example oracle query budget (unlimited when absent).
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 1)]
    parallelism: usize,
    #[arg(long)]
    out: PathBuf,
    /// Successes above this perturbation rate are filtered from averages
    /// and counted as failures.
    #[arg(long, default_value_t = 0.25)]
    pert_filter: f64,
    /// Ablation: skip search-space reduction.
    #[arg(long)]
    disable_ssr: bool,
    /// Ablation: skip the genetic optimisation.
    #[arg(long)]
    disable_ga: bool,
    /// Label count for http oracles (bow models carry their own).
    #[arg(long)]
    label_count: Option<usize>,
    /// Address of an external sentence-encoder process; the default encoder
    /// is the embedding mean over content words.
    #[arg(long)]
    encoder: Option<String>,
    /// Address of an external grammar checker; enables the grammar-error
    /// increase metric.
    #[arg(long)]
    grammar: Option<String>,
    #[arg(long, default_value_t = 10)]
    timeout_secs: u64,
    #[arg(long, value_enum, default_value = "text")]
    report_format: ReportFormat,
}

#[derive(clap::Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    variant: Variant,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Variant {
    Nb,
    Linear,
}

#[derive(clap::Args)]
struct TransferArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    oracle: String,
    #[arg(long, default_value_t = 2)]
    label_count: usize,
    #[arg(long, default_value_t = 10)]
    timeout_secs: u64,
}

#[derive(clap::Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: ReportFormat,
    #[arg(long, default_value_t = 0.25)]
    pert_filter: f64,
}

#[derive(clap::Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    train_docs: usize,
    #[arg(long, default_value_t = 250)]
    test_docs: usize,
}

fn load_oracle(
    spec: &str,
    labels: Option<usize>,
    timeout: Duration,
) -> anyhow::Result<Box<dyn HardLabelOracle>> {
    if let Some(path) = spec.strip_prefix("bow:") {
        return Ok(Box::new(files::load_bow(Path::new(path))?));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        let labels = labels.context("http oracles need --label-count")?;
        return Ok(Box::new(RemoteOracle::new(spec, labels, timeout)?));
    }
    bail!("oracle must be `bow:PATH` or an http(s) URL, got `{spec}`")
}

fn cmd_run(args: RunArgs) -> anyhow::Result<()> {
    let dataset = load_dataset(&args.dataset, args.format, args.task)?;
    let lexicon = files::load_lexicon(&args.pos_lexicon, &args.stopwords)?;
    let (table, source) = files::load_embeddings(&args.embeddings)?;
    let (index, _) = cache::synonym_index_cached(&table, &source, args.synonyms);

    let timeout = Duration::from_secs(args.timeout_secs);
    let labels = args.label_count.or(Some(label_count(&dataset)));
    let oracle = load_oracle(&args.oracle, labels, timeout)?;

    let mean_encoder;
    let external_encoder;
    let encoder: &dyn SentenceEncoder = match &args.encoder {
        Some(addr) => {
            external_encoder = ExternalEncoder::connect(addr, timeout)
                .with_context(|| format!("cannot reach encoder at {addr}"))?;
            &external_encoder
        }
        None => {
            mean_encoder = MeanEncoder::new(&table);
            &mean_encoder
        }
    };
    let grammar = args
        .grammar
        .as_deref()
        .map(|addr| {
            GrammarClient::connect(addr, timeout)
                .with_context(|| format!("cannot reach grammar checker at {addr}"))
        })
        .transpose()?;

    let cfg = AttackConfig {
        population_size: args.population,
        mutation_cap: args.lambda,
        max_iterations: args.iterations,
        init_fraction: args.init_fraction,
        synonym_count: args.synonyms,
        max_pert_report: args.pert_filter,
        rng_seed: args.seed,
        enable_reduction: !args.disable_ssr,
        enable_ga: !args.disable_ga,
        ..AttackConfig::default()
    };
    let ctx = SuiteContext {
        oracle: oracle.as_ref(),
        encoder,
        index: &index,
        lexicon: &lexicon,
        cfg: &cfg,
        budget: args.budget,
        parallelism: args.parallelism,
        grammar: grammar.as_ref(),
    };

    let metrics = run_suite(&dataset, &ctx);
    write_records(&args.out, &metrics.per_example)?;
    print!("{}", emit_report(&metrics, args.report_format));
    Ok(())
}

fn cmd_train(args: TrainArgs) -> anyhow::Result<()> {
    let dataset = load_dataset(&args.dataset, args.format, TaskKind::Classification)?;
    let pairs: Vec<(String, usize)> = dataset
        .examples
        .into_iter()
        .map(|e| (e.text, e.label))
        .collect();
    let variant = match args.variant {
        Variant::Nb => BowVariant::NaiveBayes,
        Variant::Linear => BowVariant::Linear,
    };
    let (model, accuracy) = train_bow(&pairs, variant)?;
    files::save_bow(&args.out, &model)?;
    println!(
        "trained {:?} on {} examples, training accuracy {:.2}%",
        variant,
        pairs.len(),
        accuracy * 100.0
    );
    Ok(())
}

fn cmd_transfer(args: TransferArgs) -> anyhow::Result<()> {
    let records = read_records(&args.results)?;
    let oracle = load_oracle(
        &args.oracle,
        Some(args.label_count),
        Duration::from_secs(args.timeout_secs),
    )?;
    let accuracy = transfer_accuracy(&records, oracle.as_ref())?;
    println!("transfer accuracy {:.2}%", accuracy * 100.0);
    Ok(())
}

fn cmd_report(args: ReportArgs) -> anyhow::Result<()> {
    let records = read_records(&args.results)?;
    let metrics = hardlabel_cli::aggregate(&records, args.pert_filter);
    print!("{}", emit_report(&metrics, args.format));
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> anyhow::Result<()> {
    let cfg = ToyConfig {
        train_docs: args.train_docs,
        test_docs: args.test_docs,
        ..ToyConfig::default()
    };
    let bundle = generate(&cfg, args.seed);
    std::fs::create_dir_all(&args.out_dir)?;
    let write_csv = |name: &str, rows: &[(String, usize)]| -> anyhow::Result<()> {
        let mut w = csv::Writer::from_path(args.out_dir.join(name))?;
        w.write_record(["text", "label"])?;
        for (text, label) in rows {
            w.write_record([text.as_str(), &label.to_string()])?;
        }
        Ok(w.flush()?)
    };
    write_csv("train.csv", &bundle.train)?;
    write_csv("test.csv", &bundle.test)?;
    std::fs::write(args.out_dir.join("embeddings.txt"), &bundle.embeddings)?;
    std::fs::write(args.out_dir.join("pos_lexicon.tsv"), &bundle.pos_lexicon)?;
    std::fs::write(args.out_dir.join("stopwords.txt"), &bundle.stopwords)?;
    println!(
        "wrote {} train and {} test documents to {}",
        bundle.train.len(),
        bundle.test.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(args) => cmd_run(args),
        Command::TrainBow(args) => cmd_train(args),
        Command::Transfer(args) => cmd_transfer(args),
        Command::Report(args) => cmd_report(args),
        Command::Synth(args) => cmd_synth(args),
    }
}

//! Command-line entry point. Each subcommand composes library operations.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::corpus::{corpus_stats, TokenizedCorpus};
use crate::eval::{evaluate, EvalSet};
use crate::glove::{fit_glove, GloveConfig};
use crate::model::{Algorithm, Mode};
use crate::pipeline::{ingest, load_pipeline_config, InputFormat, Pipeline, PipelineConfig};
use crate::report::{emit_report, read_runs, summary_table};
use crate::sgns::{fit_sgns, SgnsConfig};
use crate::sweep::{run_sweep, summarize, SweepConfig};
use crate::vecfile::{load_vec, save_vec};

pub const WORKERS_ENV: &str = "DUPEMBED_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dupembed", version, about = "Corpus duplication experiments for word embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read raw documents and write a tokenized corpus.
    Ingest(IngestArgs),
    /// Repeat a corpus rho times.
    Duplicate(DuplicateArgs),
    /// Print document, sentence, token and type counts.
    Stats(StatsArgs),
    /// Train one embedding model and save its vectors.
    Train(TrainArgs),
    /// Score a vector file on a sentence-ranking evaluation set.
    Eval(EvalArgs),
    /// Run a duplication sweep and write its report.
    Sweep(SweepArgs),
    /// Rebuild report files from a runs file.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Plain,
    Jsonl,
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// Input files.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Pipeline config (json); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Plain)]
    format: FormatArg,
}

#[derive(Debug, Args)]
struct DuplicateArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Duplication factor, at least 1.
    #[arg(long, value_parser = parse_rho)]
    rho: u64,
    #[arg(long)]
    out: PathBuf,
    /// Shuffle document order of the result.
    #[arg(long)]
    shuffle: bool,
    /// Seed for --shuffle.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AlgoArg {
    W2v,
    Ft,
    Glove,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Cbow,
    Sg,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    algo: AlgoArg,
    /// Ignored for glove.
    #[arg(long, value_enum, default_value_t = ModeArg::Sg)]
    mode: ModeArg,
    #[arg(long = "in")]
    input: PathBuf,
    /// Output vector file; metadata goes to <out>.meta.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = SgnsConfig::default().seed)]
    seed: u64,
    /// Training threads; 1 gives bit-reproducible results.
    #[arg(long, env = WORKERS_ENV, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value_t = SgnsConfig::default().dim)]
    dim: usize,
    #[arg(long, default_value_t = SgnsConfig::default().window)]
    window: usize,
    /// [default: 5 for w2v/ft, 25 for glove]
    #[arg(long)]
    epochs: Option<usize>,
    /// [default: 0.025 for w2v/ft, 0.05 for glove]
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long, default_value_t = SgnsConfig::default().min_count)]
    min_count: usize,
    #[arg(long, default_value_t = SgnsConfig::default().negatives)]
    negatives: usize,
    /// Subsampling threshold.
    #[arg(long, default_value_t = crate::vocab::DEFAULT_SUBSAMPLE, conflicts_with = "no_subsample")]
    subsample: f64,
    #[arg(long)]
    no_subsample: bool,
    #[arg(long, default_value_t = SgnsConfig::default().table_power)]
    table_power: f64,
    #[arg(long, default_value_t = SgnsConfig::default().table_size)]
    table_size: usize,
    #[arg(long, default_value_t = SgnsConfig::default().ngram_min)]
    ngram_min: usize,
    #[arg(long, default_value_t = SgnsConfig::default().ngram_max)]
    ngram_max: usize,
    #[arg(long, default_value_t = SgnsConfig::default().buckets)]
    buckets: usize,
    #[arg(long, default_value_t = GloveConfig::default().x_max)]
    x_max: f64,
    #[arg(long, default_value_t = GloveConfig::default().alpha)]
    alpha: f64,
}

#[derive(Debug, Args)]
struct EvalArgs {
    /// Vector file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    evalset: PathBuf,
    /// Write per-item results as json.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Pipeline config used to tokenize the sentences.
    #[arg(long)]
    pipeline_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Concurrent training jobs [default: from config]
    #[arg(long)]
    jobs: Option<usize>,
    /// Threads per training run [default: from config]
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(long)]
    runs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `argv` (program name first), runs the subcommand and returns
/// the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => return usage_error(e, &argv),
    };
    match dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_RUNTIME
        }
    }
}

fn parse_rho(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(r) => Ok(r),
        Err(e) => Err(e.to_string()),
    }
}

fn usage_error(e: clap::Error, argv: &[OsString]) -> i32 {
    use clap::error::ErrorKind;
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        let _ = e.print();
        return EXIT_OK;
    }
    let mut cmd = Cli::command();
    cmd.build();
    let name = argv
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_owned);
    let help = match name.and_then(|n| cmd.find_subcommand_mut(&n).map(|s| s.render_help())) {
        Some(h) => h,
        None => cmd.render_help(),
    };
    eprintln!("{}\n{help}", e.render());
    EXIT_USAGE
}

fn dispatch(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(a),
        Command::Duplicate(a) => cmd_duplicate(a),
        Command::Stats(a) => cmd_stats(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Report(a) => cmd_report(a),
    }
}

fn pipeline_config(path: Option<&PathBuf>) -> anyhow::Result<PipelineConfig> {
    match path {
        Some(p) => load_pipeline_config(p).with_context(|| format!("pipeline config {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

fn cmd_ingest(a: IngestArgs) -> anyhow::Result<()> {
    let pipeline = Pipeline::new(pipeline_config(a.config.as_ref())?)?;
    let format = match a.format {
        FormatArg::Plain => InputFormat::Plain,
        FormatArg::Jsonl => InputFormat::JsonLines,
    };
    let ingested = ingest(&a.inputs, format)?;
    if ingested.warnings() > 0 {
        eprintln!(
            "warning: {} invalid UTF-8 sequences replaced, {} malformed records skipped",
            ingested.invalid_sequences, ingested.malformed_records
        );
    }
    let corpus = pipeline.process(&ingested.documents);
    corpus.save(&a.out)?;
    print!("{}", corpus.stats().to_kv());
    Ok(())
}

fn cmd_duplicate(a: DuplicateArgs) -> anyhow::Result<()> {
    let corpus = TokenizedCorpus::load(&a.input)?;
    let rho = usize::try_from(a.rho).context("rho too large")?;
    let out = if a.shuffle {
        corpus.duplicate_shuffled(rho, a.seed)?
    } else {
        corpus.duplicate(rho)?
    };
    out.save(&a.out)?;
    print!("{}", out.stats().to_kv());
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> anyhow::Result<()> {
    let corpus = TokenizedCorpus::load(&a.input)?;
    print!("{}", corpus_stats(corpus.view()).to_kv());
    Ok(())
}

fn cmd_train(a: TrainArgs) -> anyhow::Result<()> {
    let corpus = TokenizedCorpus::load(&a.input)?;
    let trained = if a.algo == AlgoArg::Glove {
        let defaults = GloveConfig::default();
        let config = GloveConfig {
            dim: a.dim,
            x_max: a.x_max,
            alpha: a.alpha,
            epochs: a.epochs.unwrap_or(defaults.epochs),
            initial_lr: a.lr.unwrap_or(defaults.initial_lr),
            window: a.window,
            min_count: a.min_count,
            seed: a.seed,
            workers: a.workers,
        };
        fit_glove(corpus.view(), &config)?
    } else {
        let defaults = SgnsConfig::default();
        let config = SgnsConfig {
            algorithm: if a.algo == AlgoArg::Ft { Algorithm::FastText } else { Algorithm::Word2Vec },
            mode: match a.mode {
                ModeArg::Cbow => Mode::Cbow,
                ModeArg::Sg => Mode::Skipgram,
            },
            dim: a.dim,
            window: a.window,
            epochs: a.epochs.unwrap_or(defaults.epochs),
            negatives: a.negatives,
            initial_lr: a.lr.unwrap_or(defaults.initial_lr),
            min_count: a.min_count,
            subsample: (!a.no_subsample).then_some(a.subsample),
            table_power: a.table_power,
            table_size: a.table_size,
            ngram_min: a.ngram_min,
            ngram_max: a.ngram_max,
            buckets: a.buckets,
            seed: a.seed,
            workers: a.workers,
        };
        fit_sgns(corpus.view(), &config)?
    };
    save_vec(&trained.model, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    let extra = [
        ("corpus", a.input.display().to_string()),
        ("corpus_tokens", corpus.token_count().to_string()),
        ("duplication_factor", corpus.duplication_factor().to_string()),
        ("wall_time_s", format!("{:.3}", trained.stats.wall_time.as_secs_f64())),
    ];
    trained.model.write_metadata(&a.out, &extra)?;
    println!("vocab_size={}", trained.model.vocab.len());
    println!("dim={}", trained.model.dim());
    println!("wall_time_s={:.3}", trained.stats.wall_time.as_secs_f64());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> anyhow::Result<()> {
    let model = load_vec(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let evalset = EvalSet::load(&a.evalset).with_context(|| format!("reading {}", a.evalset.display()))?;
    let pipeline = Pipeline::new(pipeline_config(a.pipeline_config.as_ref())?)?;
    let result = evaluate(&model, &evalset, &pipeline);
    println!("mean_tau={}", result.mean_tau);
    println!("items={}", result.per_item_tau.len());
    println!("degenerate_items={}", result.degenerate_items);
    if let Some(path) = a.report {
        fs::write(&path, serde_json::to_string_pretty(&result)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> anyhow::Result<()> {
    let mut config = SweepConfig::load(&a.config)?;
    if let Some(jobs) = a.jobs {
        config.jobs = jobs;
    }
    if let Some(workers) = a.workers {
        config.sgns.workers = workers;
        config.glove.workers = workers;
    }
    let (Some(corpus_path), Some(evalset_path)) = (&config.corpus, &config.evalset) else {
        bail!("sweep config must name both corpus and evalset");
    };
    let corpus = TokenizedCorpus::load(corpus_path)?;
    let evalset = EvalSet::load(evalset_path).with_context(|| format!("reading {}", evalset_path.display()))?;
    let pipeline = Pipeline::new(config.pipeline.clone())?;
    let outcome = run_sweep(&corpus, &evalset, &pipeline, &config)?;
    for f in &outcome.failures {
        eprintln!(
            "warning: {} rho={} run={} seed={} failed: {}",
            f.model, f.rho, f.run, f.seed, f.error
        );
    }
    let summary = summarize(&outcome.records)?;
    emit_report(&summary, &outcome.records, &a.out)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(summary_table(&summary).as_bytes())?;
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let records = read_runs(&a.runs)?;
    let summary = summarize(&records)?;
    emit_report(&summary, &records, &a.out)?;
    print!("{}", summary_table(&summary));
    Ok(())
}

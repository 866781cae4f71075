//! Thin command-line front end over the library. Subcommands map 1:1 onto
//! library entry points; everything interesting lives in `embedlens::`.
//!
//! Exit codes: 0 success, 1 fatal (bad arguments, config, or I/O),
//! 2 sweep finished but some cells failed.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use embedlens::datasets::{generate, DatasetKind, DatasetSpec};
use embedlens::harness::{
    evaluate_pair, read_results_csv, run_experiment, summarize, summary_to_json, write_results,
    ExperimentConfig, MetricSpec, OutputFormat,
};
use embedlens::io::{matrix_to_csv, read_matrix_csv};
use embedlens::metrics::{IdpeMode, MetricName};
use embedlens::numerics::InversionPolicy;
use embedlens::transforms::{apply_transform, TransformKind, TransformSpec};
use embedlens::Result;

#[derive(Parser)]
#[command(name = "embedlens", version, about = "Measure what an embedding preserves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as matrix CSV
    Generate(GenerateArgs),
    /// Embed a matrix CSV with PCA, GRP, or t-SNE
    Transform(TransformArgs),
    /// Score an embedding file against its original matrix
    Evaluate(EvaluateArgs),
    /// Run a configured experiment grid
    Sweep(SweepArgs),
    /// Aggregate a results CSV into per-cell statistics
    Summarize(SummarizeArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// blobs | circles | moons | s_curve | swiss_roll
    #[arg(long)]
    dataset: String,
    /// Sample count
    #[arg(long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Feature count (blobs only; shapes have fixed dimensionality)
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Standardize columns to mean 0, std 1 after generation
    #[arg(long)]
    standardize: bool,
    /// Output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TransformArgs {
    /// Input matrix CSV
    input: PathBuf,
    /// pca | grp | tsne
    #[arg(long)]
    method: String,
    #[arg(long, default_value_t = 2)]
    d_out: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// t-SNE only (defaults: perplexity 30, 1000 iterations,
    /// learning rate 200, exaggeration 12)
    #[arg(long)]
    perplexity: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    early_exaggeration: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Original (high-dimensional) matrix CSV
    original: PathBuf,
    /// Embedding matrix CSV, row-aligned with the original
    embedding: PathBuf,
    /// Metric name, repeatable; 'all' = the six comparison metrics
    #[arg(long = "metric", default_value = "all")]
    metrics: Vec<String>,
    /// Neighborhood size for rank-based metrics and IDPE
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// IDPE mode: box1 | consistent
    #[arg(long, default_value = "box1")]
    mode: String,
    /// IDPE: count each point as its own neighbor (default per mode)
    #[arg(long)]
    include_self: Option<bool>,
    /// Covariance inversion: auto | exact | pseudo | ridge:<lambda>
    #[arg(long, default_value = "auto")]
    policy: String,
    /// Seed for the accuracy probe's train/test split
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Results path (defaults to the config's output_path)
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv | json
    #[arg(long, default_value = "csv")]
    format: String,
    /// Worker threads (default: $EMBEDLENS_JOBS, then all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Fill wall_time_ms (timings vary, so reruns stop being byte-identical)
    #[arg(long)]
    timing: bool,
    /// Override the config's base_seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SummarizeArgs {
    /// Results CSV produced by `sweep`
    input: PathBuf,
    /// Write the JSON summary here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own message (also for --help/--version)
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Transform(args) => cmd_transform(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Summarize(args) => cmd_summarize(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<i32> {
    let kind = DatasetKind::from_str(&args.dataset)?;
    let mut spec = DatasetSpec::new(kind, args.n, args.noise, args.seed);
    if let Some(dim) = args.dim {
        if kind != DatasetKind::Blobs {
            return Err(embedlens::Error::Contract(format!(
                "--dim only applies to blobs; {kind} is natively {}-dimensional",
                kind.native_dim().expect("shapes have a native dim")
            )));
        }
        spec.dim = dim;
    }
    spec.standardize = args.standardize;
    let m = generate(&spec)?;
    emit(&matrix_to_csv(&m), args.out.as_ref())?;
    Ok(0)
}

fn cmd_transform(args: TransformArgs) -> Result<i32> {
    let x = read_matrix_csv(&args.input)?;
    let mut spec = TransformSpec::new(TransformKind::from_str(&args.method)?, args.d_out);
    if let Some(v) = args.perplexity {
        spec.tsne.perplexity = v;
    }
    if let Some(v) = args.iterations {
        spec.tsne.iterations = v;
    }
    if let Some(v) = args.learning_rate {
        spec.tsne.learning_rate = v;
    }
    if let Some(v) = args.early_exaggeration {
        spec.tsne.early_exaggeration = v;
    }
    let z = apply_transform(&x, &spec, args.seed)?;
    emit(&matrix_to_csv(&z), args.out.as_ref())?;
    Ok(0)
}

fn parse_policy(s: &str) -> Result<InversionPolicy> {
    Ok(match s {
        "auto" => InversionPolicy::Auto,
        "exact" => InversionPolicy::Exact,
        "pseudo" => InversionPolicy::Pseudo,
        other => match other.strip_prefix("ridge:").and_then(|v| v.parse().ok()) {
            Some(lambda) => InversionPolicy::Ridge { lambda },
            None => {
                return Err(embedlens::Error::Contract(format!(
                    "unknown policy '{other}' (expected auto, exact, pseudo, or ridge:<lambda>)"
                )))
            }
        },
    })
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<i32> {
    let x = read_matrix_csv(&args.original)?;
    let z = read_matrix_csv(&args.embedding)?;
    let mode = IdpeMode::from_str(&args.mode)?;
    let policy = parse_policy(&args.policy)?;

    let spec_for = |name: MetricName| match name {
        MetricName::MeanReciprocalRank | MetricName::Accuracy => MetricSpec::named(name),
        MetricName::Idpe => MetricSpec {
            include_self: args.include_self,
            ..MetricSpec::idpe(mode, args.k)
        },
        _ => MetricSpec::with_k(name, args.k),
    };
    let mut specs = Vec::new();
    for raw in &args.metrics {
        if raw == "all" {
            for name in [
                MetricName::AverageRank,
                MetricName::AverageNormalizedRank,
                MetricName::MeanReciprocalRank,
                MetricName::Trustworthiness,
                MetricName::Continuity,
                MetricName::Idpe,
            ] {
                specs.push(spec_for(name));
            }
        } else {
            specs.push(spec_for(MetricName::from_str(raw)?));
        }
    }

    let reports = evaluate_pair(&x, &z, &specs, policy, args.seed)?;
    let mut text = serde_json::to_string_pretty(&reports).expect("report serialization");
    text.push('\n');
    emit(&text, args.out.as_ref())?;
    Ok(0)
}

fn resolve_jobs(flag: Option<usize>) -> Result<usize> {
    if let Some(jobs) = flag {
        return Ok(jobs);
    }
    if let Ok(raw) = std::env::var("EMBEDLENS_JOBS") {
        return raw.parse().map_err(|_| {
            embedlens::Error::Config(format!("EMBEDLENS_JOBS must be a thread count, got '{raw}'"))
        });
    }
    Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if args.timing {
        config.record_timing = true;
    }
    let format = OutputFormat::from_str(&args.format)?;
    let jobs = resolve_jobs(args.jobs)?;

    let rows = run_experiment(&config, jobs)?;
    let failed = rows.iter().filter(|r| r.is_error()).count();
    let path = args.out.clone().unwrap_or_else(|| config.output_path.clone());
    write_results(&rows, &config, &path, format)?;
    eprintln!(
        "sweep: wrote {} rows ({failed} failed) to {}",
        rows.len(),
        path.display()
    );
    Ok(if failed > 0 { 2 } else { 0 })
}

fn cmd_summarize(args: SummarizeArgs) -> Result<i32> {
    let rows = read_results_csv(&args.input)?;
    let summary = summarize(&rows);
    let mut text = summary_to_json(&summary);
    text.push('\n');
    emit(&text, args.out.as_ref())?;
    Ok(0)
}

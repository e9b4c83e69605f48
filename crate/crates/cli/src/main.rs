use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use mwe_attn::config::RunConfig;
use mwe_attn::corpus::CorpusFormat;
use mwe_attn::finetune::Task;
use mwe_attn::metrics::MetricKind;
use mwe_attn::pipeline::{self, Source};
use mwe_attn::Error;

/// Layer-wise attention analysis over multiword-expression spans.
#[derive(Debug, Parser)]
#[command(name = "mwe-attn", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, default_value = "mwe-attn.toml")]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Keep at most N instances per (language, MWE type).
    #[arg(long, global = true, value_name = "N")]
    balance: Option<usize>,
    /// Extraction threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate corpora and write canonical JSONL plus an ingest report.
    Ingest {
        #[arg(long)]
        corpus: Option<String>,
        /// Also convert to jsonl, bio or tsv.
        #[arg(long)]
        to: Option<CorpusFormat>,
    },
    /// Run models over corpora and write tensor archives.
    Extract {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        corpus: Option<String>,
        /// Archive root instead of the model's default.
        #[arg(long, value_name = "DIR")]
        dump_archive: Option<PathBuf>,
    },
    /// Compute per-layer curves from archives.
    Analyze {
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        corpus: Option<String>,
        /// Archive root to read instead of the model's default.
        #[arg(long, value_name = "DIR", conflicts_with = "in_memory")]
        from_archive: Option<PathBuf>,
        /// Run the model directly instead of reading an archive.
        #[arg(long)]
        in_memory: bool,
        /// context_to_mwe or within_mwe; repeatable.
        #[arg(long)]
        metric: Vec<MetricKind>,
    },
    /// Per-layer deltas against the baseline, plus top-k layer tables.
    Compare {
        #[arg(long)]
        baseline: Option<String>,
        #[arg(long)]
        tuned: Option<String>,
    },
    /// Train a probe on a linguistic task and register the checkpoint.
    Finetune {
        #[arg(long)]
        task: Task,
        #[arg(long)]
        train_size: Option<usize>,
    },
    /// Write CSV, SVG, Markdown and provenance under report/.
    Report,
}

fn load(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cli.balance.is_some() {
        cfg.balance = cli.balance;
    }
    if cli.workers.is_some() {
        cfg.workers = cli.workers;
    }
    if let Some(d) = &cli.output_dir {
        cfg.output_dir = std::env::current_dir()
            .map_err(|e| Error::io(".", e))?
            .join(d);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn to_value<T: serde::Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("summary serializes")
}

fn run(cli: &Cli) -> Result<Value, Error> {
    let cfg = load(cli)?;
    Ok(match &cli.command {
        Command::Ingest { corpus, to } => to_value(pipeline::cmd_ingest(&cfg, corpus.as_deref(), *to)?),
        Command::Extract {
            model,
            corpus,
            dump_archive,
        } => to_value(pipeline::cmd_extract(
            &cfg,
            model.as_deref(),
            corpus.as_deref(),
            dump_archive.as_deref(),
        )?),
        Command::Analyze {
            model,
            corpus,
            from_archive,
            in_memory,
            metric,
        } => {
            let source = match (from_archive, in_memory) {
                (Some(dir), _) => Source::ArchiveAt(dir),
                (None, true) => Source::InMemory,
                (None, false) => Source::Archive,
            };
            let kinds = (!metric.is_empty()).then_some(&metric[..]);
            let curves = pipeline::cmd_analyze(&cfg, model.as_deref(), corpus.as_deref(), source, kinds)?;
            let rows: Vec<Value> = curves
                .iter()
                .map(|c| {
                    json!({
                        "curve": c.stem(),
                        "n_instances": c.n_instances,
                        "n_skipped": c.n_skipped,
                        "values": c.values,
                    })
                })
                .collect();
            Value::Array(rows)
        }
        Command::Compare { baseline, tuned } => {
            let res = pipeline::cmd_compare(&cfg, baseline.as_deref(), tuned.as_deref())?;
            let cmp: Vec<Value> = res
                .comparisons
                .iter()
                .map(|c| json!({ "comparison": c.stem(), "deltas": c.deltas }))
                .collect();
            json!({ "comparisons": cmp, "topk_tables": res.topk.len() })
        }
        Command::Finetune { task, train_size } => to_value(pipeline::cmd_finetune(&cfg, *task, *train_size)?),
        Command::Report => to_value(pipeline::cmd_report(&cfg)?),
    })
}

fn error_json(e: &Error) -> Value {
    let mut v = json!({ "error": e.kind(), "message": e.to_string() });
    if let Error::Config(c) = e {
        v["fields"] = to_value(c.fields());
    }
    v
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(v) => {
            let text = serde_json::to_string_pretty(&v).expect("json");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(if e.is_config() { 2 } else { 1 })
        }
    }
}

//! Command orchestration shared by the CLI and the integration tests.
//!
//! On-disk layout under `output_dir`:
//!
//! ```text
//! corpora/<corpus>.jsonl, <corpus>.ingest.json
//! archives/<model>/<corpus>/manifest.json, *.f32, alignment.jsonl
//! curves/<stem>.json, <stem>.csv, <corpus>__<model>.skips.jsonl
//! comparisons/<stem>.json, <stem>.csv
//! topk/<stem>.json, <stem>.csv
//! checkpoints/<model>.json, <model>.history.json, registry.json
//! report/...
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::align::{align, AlignmentRecord, OverlapPolicy};
use crate::attnio::archive::{read_archive, sha256_hex, write_archive, ArchiveItem, MANIFEST};
use crate::attnio::{head_average, ModelRunner, ROW_TOLERANCE};
use crate::config::{ConfigError, CorpusEntry, ModelEntry, RunConfig};
use crate::corpus::{balance, convert_corpus, load_corpus, Corpus, CorpusFormat, MweType, RecordError};
use crate::finetune::{
    append_record, load_checkpoint, majority_baseline_f1, prepare_task_dataset, reference_train_size,
    save_checkpoint, tokenizer_for, train, CheckpointRecord, EpochStats, FinetuneConfig, SplitSizes, Task,
};
use crate::metrics::{aggregate, compare, curve_for_instance, top_k, CurveMeta, MetricError, MetricKind, MetricOptions, TaskTag};
use crate::model::ToyRunner;
use crate::report::csv::{comparison_to_csv, curve_to_csv, topk_to_csv};
use crate::report::{write_report, ModelProvenance, Provenance, ReportBundle};
use crate::{ComparisonResult64, Error, LayerCurve64, Result, ToyEncoder32, TopKTable64};

pub const ALIGNMENT_REPORT: &str = "alignment.jsonl";

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path, e))?;
    text.push('\n');
    write_bytes(path, text.as_bytes())
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::json(path, e))?);
        out.push('\n');
    }
    write_bytes(path, out.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// `*.json` files directly under `dir`, sorted by name. A missing directory
/// yields nothing.
fn json_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let rd = match fs::read_dir(dir) {
        Ok(rd) => rd,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(dir, e)),
    };
    let mut out = Vec::new();
    for entry in rd {
        let p = entry.map_err(|e| Error::io(dir, e))?.path();
        if p.extension().is_some_and(|x| x == "json") {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn unknown(field: &str, name: &str) -> Error {
    ConfigError::field(field, format!("`{name}` is not configured")).into()
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub entry: CorpusEntry,
    pub corpus: Corpus,
    pub errors: Vec<RecordError>,
    pub warnings: Vec<String>,
}

/// Loads one configured corpus, balanced if the config asks for it.
pub fn load_configured_corpus(cfg: &RunConfig, entry: &CorpusEntry) -> Result<LoadedCorpus> {
    let out = load_corpus(cfg.resolve(&entry.path), entry.format, &entry.load_options())?;
    let mut warnings = out.warnings;
    let corpus = match cfg.balance {
        Some(n) => {
            let (c, w) = balance(&out.corpus, n, cfg.seed);
            warnings.extend(w);
            c
        }
        None => out.corpus,
    };
    for w in &warnings {
        log::warn!("{}: {w}", entry.name);
    }
    Ok(LoadedCorpus {
        entry: entry.clone(),
        corpus,
        errors: out.errors,
        warnings,
    })
}

/// All configured corpora, or just `only`.
pub fn load_corpora(cfg: &RunConfig, only: Option<&str>) -> Result<Vec<LoadedCorpus>> {
    let entries: Vec<&CorpusEntry> = match only {
        Some(name) => vec![cfg.corpus(name).ok_or_else(|| unknown("corpus", name))?],
        None => cfg.corpora.iter().collect(),
    };
    if entries.is_empty() {
        return Err(ConfigError::field("corpora", "no corpus configured").into());
    }
    entries.into_iter().map(|e| load_configured_corpus(cfg, e)).collect()
}

fn selected_models<'a>(cfg: &'a RunConfig, only: Option<&str>) -> Result<Vec<&'a ModelEntry>> {
    let models: Vec<&ModelEntry> = match only {
        Some(id) => vec![cfg.model(id).ok_or_else(|| unknown("model", id))?],
        None => cfg.models.iter().collect(),
    };
    if models.is_empty() {
        return Err(ConfigError::field("models", "no model configured").into());
    }
    Ok(models)
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub name: String,
    pub source_format: CorpusFormat,
    pub n_instances: usize,
    pub type_counts: BTreeMap<MweType, usize>,
    pub languages: Vec<String>,
    pub sha256: String,
    pub errors: Vec<RecordError>,
    pub warnings: Vec<String>,
    pub outputs: Vec<PathBuf>,
}

fn extension(f: CorpusFormat) -> &'static str {
    match f {
        CorpusFormat::CanonicalJsonl => "jsonl",
        CorpusFormat::BioTagged => "bio",
        CorpusFormat::ParallelTsv => "tsv",
    }
}

/// Normalizes each corpus to canonical JSONL under `corpora/`, optionally
/// also converting to `to`, and writes a per-corpus ingest report.
pub fn cmd_ingest(cfg: &RunConfig, only: Option<&str>, to: Option<CorpusFormat>) -> Result<Vec<IngestSummary>> {
    let dir = cfg.output_dir().join("corpora");
    let mut summaries = Vec::new();
    for lc in load_corpora(cfg, only)? {
        let name = lc.entry.name.clone();
        let canonical = convert_corpus(&lc.corpus, CorpusFormat::CanonicalJsonl)?;
        let path = dir.join(format!("{name}.jsonl"));
        write_bytes(&path, &canonical.bytes)?;
        let mut outputs = vec![path];
        let mut warnings = lc.warnings;
        if let Some(f) = to.filter(|f| *f != CorpusFormat::CanonicalJsonl) {
            let conv = convert_corpus(&lc.corpus, f)?;
            let path = dir.join(format!("{name}.{}", extension(f)));
            write_bytes(&path, &conv.bytes)?;
            outputs.push(path);
            warnings.extend(conv.warnings);
        }
        let summary = IngestSummary {
            name: name.clone(),
            source_format: lc.entry.format,
            n_instances: lc.corpus.len(),
            type_counts: lc.corpus.metadata.type_counts.clone(),
            languages: lc.corpus.metadata.languages.clone(),
            sha256: sha256_hex(&canonical.bytes),
            errors: lc.errors,
            warnings,
            outputs,
        };
        write_json(&dir.join(format!("{name}.ingest.json")), &summary)?;
        summaries.push(summary);
    }
    Ok(summaries)
}

/// Runner for a toy or checkpoint entry; `None` for archive-only models.
pub fn load_runner(cfg: &RunConfig, m: &ModelEntry) -> Result<Option<ToyRunner<f32>>> {
    if let Some(toy) = &m.toy {
        let config = m.encoder_config().expect("toy entry has a config");
        return Ok(Some(ToyRunner::seeded(&m.id, config, toy.seed, toy.variant)));
    }
    if let Some(p) = &m.checkpoint {
        let path = cfg.resolve(p);
        if !path.exists() {
            return Err(ConfigError::field(
                format!("models.{}.checkpoint", m.id),
                format!("{} does not exist (run `finetune` first?)", path.display()),
            )
            .into());
        }
        let ckpt = load_checkpoint::<f32>(&path)?;
        let c = &ckpt.encoder.config;
        for (name, want, have) in [("layers", m.layers, c.layers), ("heads", m.heads, c.heads)] {
            if want.is_some_and(|w| w != have) {
                return Err(ConfigError::field(
                    format!("models.{}.{name}", m.id),
                    format!("checkpoint has {have}, config says {}", want.unwrap()),
                )
                .into());
            }
        }
        return Ok(Some(ToyRunner::new(&m.id, ckpt.encoder)));
    }
    Ok(None)
}

/// Where a model's archives live: its configured `archive` directory, or
/// `archives/<model>` under the output directory.
pub fn archive_root(cfg: &RunConfig, m: &ModelEntry) -> PathBuf {
    match &m.archive {
        Some(p) => cfg.resolve(p),
        None => cfg.output_dir().join("archives").join(&m.id),
    }
}

/// Runs every instance through `runner` on `workers` threads. Items come
/// back in corpus order together with one alignment record per instance.
pub fn extract_items<R: ModelRunner<f32>>(
    runner: &R,
    corpus: &Corpus,
    workers: Option<usize>,
) -> Result<(Vec<ArchiveItem<f32>>, Vec<AlignmentRecord>)> {
    if corpus.is_empty() {
        return Err(crate::corpus::CorpusError::Empty.into());
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::from(ConfigError::field("workers", e.to_string())))?;
    let results: Vec<Result<(ArchiveItem<f32>, AlignmentRecord)>> = pool.install(|| {
        corpus
            .instances
            .par_iter()
            .map(|inst| {
                let (tokens, raw) = runner.run(&inst.text)?;
                let stack = head_average(&raw)?;
                stack.validate(ROW_TOLERANCE)?;
                let aligned = align(inst, &tokens, OverlapPolicy::default());
                if let Err(e) = &aligned {
                    if !e.is_skippable() {
                        return Err(e.clone().into());
                    }
                }
                let record = AlignmentRecord::from_result(&inst.id, &aligned);
                Ok((
                    ArchiveItem {
                        instance_id: inst.id.clone(),
                        tokens,
                        stack,
                    },
                    record,
                ))
            })
            .collect()
    });
    let mut items = Vec::with_capacity(results.len());
    let mut records = Vec::with_capacity(results.len());
    for r in results {
        let (i, a) = r?;
        items.push(i);
        records.push(a);
    }
    Ok((items, records))
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractSummary {
    pub corpus: String,
    pub model_id: String,
    pub archive_dir: PathBuf,
    pub n_archived: usize,
    pub n_alignment_skipped: usize,
}

/// Extracts head-averaged attention for each (model, corpus) pair into a
/// tensor archive, entries sorted by instance id. `dump_root` replaces the
/// model's archive root.
pub fn cmd_extract(
    cfg: &RunConfig,
    model: Option<&str>,
    corpus: Option<&str>,
    dump_root: Option<&Path>,
) -> Result<Vec<ExtractSummary>> {
    let corpora = load_corpora(cfg, corpus)?;
    let mut out = Vec::new();
    for m in selected_models(cfg, model)? {
        let Some(runner) = load_runner(cfg, m)? else {
            if model.is_some() {
                return Err(ConfigError::field(
                    format!("models.{}", m.id),
                    "archive-only model cannot be extracted",
                )
                .into());
            }
            log::info!("{}: archive-only model, nothing to extract", m.id);
            continue;
        };
        let root = dump_root.map(Path::to_path_buf).unwrap_or_else(|| archive_root(cfg, m));
        for lc in &corpora {
            let (mut items, mut records) = extract_items(&runner, &lc.corpus, cfg.workers)?;
            items.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
            records.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
            let dir = root.join(&lc.entry.name);
            write_archive(&items, &dir, &m.id, Some(m.task_tag.as_str()))?;
            write_jsonl(&dir.join(ALIGNMENT_REPORT), &records)?;
            let skipped = records.iter().filter(|r| r.skipped_reason.is_some()).count();
            out.push(ExtractSummary {
                corpus: lc.entry.name.clone(),
                model_id: m.id.clone(),
                archive_dir: dir,
                n_archived: items.len(),
                n_alignment_skipped: skipped,
            });
        }
    }
    Ok(out)
}

/// Why an instance did not contribute to a curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipRecord {
    pub instance_id: String,
    pub mwe_type: MweType,
    pub metric_kind: MetricKind,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct Analysis {
    pub curves: Vec<LayerCurve64>,
    pub skips: Vec<SkipRecord>,
}

fn metric_reason(e: &MetricError) -> &'static str {
    match e {
        MetricError::ContextEmpty => "context_empty",
        MetricError::SingleTokenMwe => "single_token_mwe",
        _ => "metric_error",
    }
}

/// Curves for one model over one corpus: one per (MWE type, metric kind)
/// with at least one usable instance. Instances are visited in corpus order
/// and cast to `f64` before any metric arithmetic.
pub fn analyze_items(
    corpus: &Corpus,
    items: &[ArchiveItem<f32>],
    model_id: &str,
    task_tag: TaskTag,
    kinds: &[MetricKind],
    opts: MetricOptions,
) -> Result<Analysis> {
    let by_id: HashMap<&str, &ArchiveItem<f32>> = items.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    let mut prepared = Vec::with_capacity(corpus.len());
    for inst in &corpus.instances {
        let entry = match by_id.get(inst.id.as_str()) {
            None => Err("not_extracted"),
            Some(item) => match align(inst, &item.tokens, OverlapPolicy::default()) {
                Ok(a) => {
                    item.stack.validate(ROW_TOLERANCE)?;
                    Ok((*item, a, item.stack.cast::<f64>()))
                }
                Err(e) if e.is_skippable() => Err(e.reason()),
                Err(e) => return Err(e.into()),
            },
        };
        prepared.push((inst, entry));
    }

    let mut types: Vec<MweType> = corpus.instances.iter().map(|i| i.mwe_type).collect();
    types.sort();
    types.dedup();
    let mut out = Analysis::default();
    for ty in types {
        for &kind in kinds {
            let mut curves = Vec::new();
            let mut skipped = 0;
            let mut skip = |id: &str, reason: &str| {
                skipped += 1;
                out.skips.push(SkipRecord {
                    instance_id: id.to_string(),
                    mwe_type: ty,
                    metric_kind: kind,
                    reason: reason.to_string(),
                });
            };
            for (inst, entry) in prepared.iter().filter(|(i, _)| i.mwe_type == ty) {
                match entry {
                    Err(reason) => skip(&inst.id, reason),
                    Ok((item, alignment, stack)) => {
                        match curve_for_instance(stack, &item.tokens, alignment, kind, opts) {
                            Ok(c) => curves.push(c),
                            Err(e) if e.is_skippable() => skip(&inst.id, metric_reason(&e)),
                            Err(e) => return Err(e.into()),
                        }
                    }
                }
            }
            if curves.is_empty() {
                log::warn!("{model_id}/{}: no usable {ty} instance for {kind}", corpus.name());
                continue;
            }
            let meta = CurveMeta {
                model_id: model_id.to_string(),
                corpus: corpus.name().to_string(),
                task_tag,
                mwe_type: ty,
                metric_kind: kind,
            };
            out.curves.push(aggregate(&curves, skipped, meta)?);
        }
    }
    Ok(out)
}

fn write_analysis(cfg: &RunConfig, corpus: &str, model: &str, a: &Analysis) -> Result<()> {
    let dir = cfg.output_dir().join("curves");
    for c in &a.curves {
        write_json(&dir.join(format!("{}.json", c.stem())), c)?;
        write_bytes(&dir.join(format!("{}.csv", c.stem())), curve_to_csv(c).as_bytes())?;
    }
    write_jsonl(&dir.join(format!("{corpus}__{model}.skips.jsonl")), &a.skips)
}

/// Where `analyze` gets attention from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source<'a> {
    /// Archives at each model's archive root.
    Archive,
    /// Archives under this root instead (`<root>/<corpus>`).
    ArchiveAt(&'a Path),
    /// Run the model now, skipping the archive round trip.
    InMemory,
}

/// Computes curves for the selected models and corpora and writes them
/// under `curves/`.
pub fn cmd_analyze(
    cfg: &RunConfig,
    model: Option<&str>,
    corpus: Option<&str>,
    source: Source<'_>,
    kinds: Option<&[MetricKind]>,
) -> Result<Vec<LayerCurve64>> {
    let kinds = kinds.unwrap_or(&cfg.metrics.kinds);
    let opts = cfg.metrics.options();
    let corpora = load_corpora(cfg, corpus)?;
    let mut all = Vec::new();
    for m in selected_models(cfg, model)? {
        let runner = match source {
            Source::InMemory => Some(load_runner(cfg, m)?.ok_or_else(|| {
                Error::from(ConfigError::field(
                    format!("models.{}", m.id),
                    "archive-only model cannot run in memory",
                ))
            })?),
            _ => None,
        };
        for lc in &corpora {
            let items = match (&runner, source) {
                (Some(r), _) => extract_items(r, &lc.corpus, cfg.workers)?.0,
                (None, Source::ArchiveAt(root)) => load_items(&root.join(&lc.entry.name), &m.id)?,
                (None, _) => load_items(&archive_root(cfg, m).join(&lc.entry.name), &m.id)?,
            };
            let a = analyze_items(&lc.corpus, &items, &m.id, m.task_tag, kinds, opts)?;
            write_analysis(cfg, &lc.entry.name, &m.id, &a)?;
            all.extend(a.curves);
        }
    }
    Ok(all)
}

fn load_items(dir: &Path, model_id: &str) -> Result<Vec<ArchiveItem<f32>>> {
    if !dir.join(MANIFEST).exists() {
        return Err(ConfigError::field(
            format!("models.{model_id}"),
            format!("no archive at {} (run `extract` first?)", dir.display()),
        )
        .into());
    }
    let (manifest, items) = read_archive(dir)?;
    if manifest.model_id != model_id {
        log::warn!("{}: archive written for `{}`, analyzed as `{model_id}`", dir.display(), manifest.model_id);
    }
    Ok(items)
}

/// Curves previously written by `analyze` for configured models and corpora.
pub fn load_curves(cfg: &RunConfig) -> Result<Vec<LayerCurve64>> {
    let mut out = Vec::new();
    for p in json_files(&cfg.output_dir().join("curves"))? {
        let c: LayerCurve64 = read_json(&p)?;
        if cfg.model(&c.model_id).is_some() && cfg.corpus(&c.corpus).is_some() {
            out.push(c);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Default)]
pub struct Comparisons {
    pub comparisons: Vec<ComparisonResult64>,
    pub topk: Vec<TopKTable64>,
}

/// Pairs each tuned curve with the baseline curve over the same corpus,
/// MWE type and metric. `baseline` defaults to the configured one and
/// `tuned` to every other model; passing the baseline id as `tuned` is
/// allowed and yields zero deltas.
pub fn compare_curves(
    curves: &[LayerCurve64],
    baseline: &str,
    tuned: Option<&str>,
    k: usize,
) -> Result<Comparisons> {
    let mut out = Comparisons::default();
    for t in curves {
        let selected = match tuned {
            Some(id) => t.model_id == id,
            None => t.model_id != baseline,
        };
        if !selected {
            continue;
        }
        let b = curves.iter().find(|b| {
            b.model_id == baseline && b.corpus == t.corpus && b.mwe_type == t.mwe_type && b.metric_kind == t.metric_kind
        });
        match b {
            Some(b) => out.comparisons.push(compare(t, b)?),
            None => log::warn!("{}: no baseline curve from `{baseline}`", t.stem()),
        }
    }
    for c in curves {
        out.topk.push(top_k(c, k.min(c.layers()))?);
    }
    Ok(out)
}

pub fn cmd_compare(cfg: &RunConfig, baseline: Option<&str>, tuned: Option<&str>) -> Result<Comparisons> {
    let baseline = match baseline {
        Some(id) => cfg.model(id).ok_or_else(|| unknown("baseline", id))?,
        None => cfg
            .baseline_model()
            .ok_or_else(|| Error::from(ConfigError::field("metrics.baseline", "no baseline model")))?,
    };
    if let Some(id) = tuned {
        cfg.model(id).ok_or_else(|| unknown("model", id))?;
    }
    let curves = load_curves(cfg)?;
    if curves.is_empty() {
        return Err(crate::report::ReportError::EmptySelection.into());
    }
    let res = compare_curves(&curves, &baseline.id, tuned, cfg.metrics.top_k)?;
    let out = cfg.output_dir();
    for c in &res.comparisons {
        let dir = out.join("comparisons");
        write_json(&dir.join(format!("{}.json", c.stem())), c)?;
        write_bytes(&dir.join(format!("{}.csv", c.stem())), comparison_to_csv(c).as_bytes())?;
    }
    for t in &res.topk {
        let stem = format!("{}__{}__{}__{}", t.corpus, t.mwe_type, t.model_id, t.metric_kind);
        let dir = out.join("topk");
        write_json(&dir.join(format!("{stem}.json")), t)?;
        write_bytes(&dir.join(format!("{stem}.csv")), topk_to_csv(t).as_bytes())?;
    }
    Ok(res)
}

#[derive(Debug, Clone, Serialize)]
pub struct FinetuneSummary {
    pub record: CheckpointRecord,
    pub majority_baseline_f1: f64,
    pub history: Vec<EpochStats>,
    pub warnings: Vec<String>,
}

fn base_encoder(cfg: &RunConfig) -> Result<(String, ToyEncoder32)> {
    let m = match &cfg.finetune.base_model {
        Some(id) => cfg.model(id).ok_or_else(|| unknown("finetune.base_model", id))?,
        None => cfg
            .baseline_model()
            .ok_or_else(|| Error::from(ConfigError::field("finetune.base_model", "no base model")))?,
    };
    let runner = load_runner(cfg, m)?.ok_or_else(|| {
        Error::from(ConfigError::field(
            "finetune.base_model",
            format!("`{}` is archive-only and has no weights", m.id),
        ))
    })?;
    Ok((m.id.clone(), runner.encoder))
}

/// Trains a probe for `task`, saves the checkpoint and appends it to the
/// registry. Train size: `train_size`, else the task's configured size,
/// else the reference size for the configured language.
pub fn cmd_finetune(cfg: &RunConfig, task: Task, train_size: Option<usize>) -> Result<FinetuneSummary> {
    let ft = &cfg.finetune;
    let sources = cfg
        .task_sources(task)
        .ok_or_else(|| Error::from(ConfigError::field(format!("finetune.tasks.{task}"), "no data configured")))?;
    let n = train_size
        .or(ft.tasks.get(&task).and_then(|d| d.train_size))
        .or_else(|| reference_train_size(&ft.language, task))
        .ok_or_else(|| {
            Error::from(ConfigError::field(
                "finetune.language",
                format!("no reference train size for `{}`; pass --train-size", ft.language),
            ))
        })?;
    let sizes = SplitSizes {
        train: n,
        dev: ft.dev_size,
        test: ft.test_size,
    };
    let dataset = prepare_task_dataset(task, &ft.language, &sources, sizes, cfg.seed)?;
    let (base_id, base) = base_encoder(cfg)?;
    let config = FinetuneConfig {
        epochs: ft.epochs,
        learning_rate: ft.learning_rate,
        batch_size: ft.batch_size,
        freeze_layers: ft.freeze_layers,
        dev_size: ft.dev_size,
        test_size: ft.test_size,
        ..FinetuneConfig::new(task, n, cfg.seed)
    };
    let model_id = format!("{base_id}-{task}-s{}", cfg.seed);
    let outcome = train(&config, &dataset, &base, &base_id, &model_id)?;
    let majority = majority_baseline_f1(&dataset, config.average, &tokenizer_for(&base))?;

    let dir = cfg.checkpoint_dir();
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let path = dir.join(format!("{model_id}.json"));
    let sha = save_checkpoint(&outcome.checkpoint, &path)?;
    let record = CheckpointRecord {
        model_id: model_id.clone(),
        base_model_id: base_id,
        task,
        language: ft.language.clone(),
        f1: outcome.test_f1,
        dev_f1: outcome.dev_f1,
        average: config.average,
        seed: cfg.seed,
        train_size: dataset.train.len(),
        dev_size: dataset.dev.len(),
        test_size: dataset.test.len(),
        epochs: config.epochs,
        best_epoch: outcome.best_epoch,
        learning_rate: config.learning_rate,
        batch_size: config.batch_size,
        freeze_layers: config.freeze_layers,
        checkpoint: path,
        checkpoint_sha256: sha,
        encoder_digest: outcome.checkpoint.encoder.digest(),
    };
    append_record(&cfg.registry_path(), record.clone())?;
    let summary = FinetuneSummary {
        record,
        majority_baseline_f1: majority,
        history: outcome.history,
        warnings: dataset.warnings,
    };
    write_json(&dir.join(format!("{model_id}.history.json")), &summary)?;
    Ok(summary)
}

/// RFC 3339 time, taken from `SOURCE_DATE_EPOCH` when set.
pub fn timestamp() -> String {
    let now = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<u64>().ok())
        .map(|s| UNIX_EPOCH + Duration::from_secs(s))
        .unwrap_or_else(SystemTime::now);
    humantime::format_rfc3339_seconds(now).to_string()
}

fn model_digest(cfg: &RunConfig, m: &ModelEntry, corpora: &[LoadedCorpus]) -> Result<Option<String>> {
    if m.toy.is_some() {
        return Ok(load_runner(cfg, m)?.map(|r| r.encoder.digest()));
    }
    if let Some(p) = &m.checkpoint {
        let path = cfg.resolve(p);
        return match fs::read(&path) {
            Ok(bytes) => Ok(Some(sha256_hex(&bytes))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(Error::io(path, e)),
        };
    }
    let root = archive_root(cfg, m);
    let mut cat = Vec::new();
    for lc in corpora {
        if let Ok(bytes) = fs::read(root.join(&lc.entry.name).join(MANIFEST)) {
            cat.extend(bytes);
        }
    }
    Ok((!cat.is_empty()).then(|| sha256_hex(&cat)))
}

pub fn provenance(cfg: &RunConfig, corpora: &[LoadedCorpus]) -> Result<Provenance> {
    let mut corpus_hashes = BTreeMap::new();
    for lc in corpora {
        let bytes = convert_corpus(&lc.corpus, CorpusFormat::CanonicalJsonl)?.bytes;
        corpus_hashes.insert(lc.entry.name.clone(), sha256_hex(&bytes));
    }
    let mut models = BTreeMap::new();
    for m in &cfg.models {
        models.insert(
            m.id.clone(),
            ModelProvenance {
                task_tag: m.task_tag,
                source: m.describe(),
                digest: model_digest(cfg, m, corpora)?,
            },
        );
    }
    Ok(Provenance {
        corpus_hashes,
        models,
        config_hash: cfg.hash(),
        timestamp: timestamp(),
        generator: format!("mwe-attn {}", env!("CARGO_PKG_VERSION")),
    })
}

/// Assembles `report/` from the curves, comparisons and top-k tables on
/// disk. Missing comparisons are recomputed from the curves.
pub fn cmd_report(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let out = cfg.output_dir();
    let curves = load_curves(cfg)?;
    if curves.is_empty() {
        return Err(crate::report::ReportError::EmptySelection.into());
    }
    let known = |model: &str, corpus: &str| cfg.model(model).is_some() && cfg.corpus(corpus).is_some();
    let mut comparisons = Vec::new();
    for p in json_files(&out.join("comparisons"))? {
        let c: ComparisonResult64 = read_json(&p)?;
        if known(&c.tuned.model_id, &c.tuned.corpus) && known(&c.baseline.model_id, &c.baseline.corpus) {
            comparisons.push(c);
        }
    }
    let mut topk = Vec::new();
    for p in json_files(&out.join("topk"))? {
        let t: TopKTable64 = read_json(&p)?;
        if known(&t.model_id, &t.corpus) {
            topk.push(t);
        }
    }
    if comparisons.is_empty() && topk.is_empty() {
        if let Some(b) = cfg.baseline_model() {
            let res = compare_curves(&curves, &b.id, None, cfg.metrics.top_k)?;
            comparisons = res.comparisons;
            topk = res.topk;
        }
    }
    let corpora = load_corpora(cfg, None)?;
    let bundle = ReportBundle {
        curves,
        comparisons,
        topk,
        provenance: provenance(cfg, &corpora)?,
    };
    Ok(write_report(&bundle, &out.join("report"), &cfg.report.style)?)
}

/// Alignment report lines for a model/corpus pair, as written by `extract`.
pub fn read_alignment_report(dir: &Path) -> Result<Vec<AlignmentRecord>> {
    let path = dir.join(ALIGNMENT_REPORT);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::json(&path, e)))
        .collect()
}

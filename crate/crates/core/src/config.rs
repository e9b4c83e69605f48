//! TOML run configuration. Relative paths are kept as written and resolved
//! against the directory of the config file, so the config hash does not
//! depend on where the checkout lives.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attnio::archive::sha256_hex;
use crate::corpus::{CasingPolicy, CorpusFormat, LoadOptions, MweType};
use crate::finetune::{Task, TaskSources};
use crate::metrics::{DiagonalPolicy, MetricKind, MetricOptions, SpecialPolicy, TaskTag};
use crate::model::{EncoderConfig, ToyVariant};
use crate::report::Style;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn joined(errors: &[FieldError]) -> String {
    errors.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {}", joined(.0))]
    Invalid(Vec<FieldError>),
}

impl ConfigError {
    pub fn field(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid(vec![FieldError {
            field: field.into(),
            message: message.into(),
        }])
    }

    pub fn fields(&self) -> &[FieldError] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: CorpusFormat,
    #[serde(default)]
    pub languages: Vec<String>,
    #[serde(default)]
    pub default_language: Option<String>,
    #[serde(default = "default_mwe_type")]
    pub default_mwe_type: MweType,
    #[serde(default)]
    pub casing: CasingPolicy,
}

fn default_format() -> CorpusFormat {
    CorpusFormat::CanonicalJsonl
}

fn default_mwe_type() -> MweType {
    MweType::Msu
}

impl CorpusEntry {
    pub fn load_options(&self) -> LoadOptions {
        LoadOptions {
            languages: self.languages.clone(),
            casing: self.casing,
            default_language: self.default_language.clone(),
            default_mwe_type: self.default_mwe_type,
            name: self.name.clone(),
        }
    }
}

/// Recipe for a seeded toy encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToySpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub variant: ToyVariant,
    #[serde(default)]
    pub d_model: Option<usize>,
    #[serde(default)]
    pub ffn_dim: Option<usize>,
    #[serde(default)]
    pub vocab_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub id: String,
    #[serde(default = "default_tag")]
    pub task_tag: TaskTag,
    #[serde(default)]
    pub layers: Option<usize>,
    #[serde(default)]
    pub heads: Option<usize>,
    #[serde(default)]
    pub max_len: Option<usize>,
    /// Exactly one of `toy`, `checkpoint` and `archive` is set.
    #[serde(default)]
    pub toy: Option<ToySpec>,
    /// Fine-tuned toy checkpoint written by `finetune`.
    #[serde(default)]
    pub checkpoint: Option<PathBuf>,
    /// Pre-extracted tensor archive, for models run outside this tool.
    #[serde(default)]
    pub archive: Option<PathBuf>,
}

fn default_tag() -> TaskTag {
    TaskTag::Pretrained
}

impl ModelEntry {
    /// Encoder shape for a toy entry.
    pub fn encoder_config(&self) -> Option<EncoderConfig> {
        let toy = self.toy.as_ref()?;
        let d = EncoderConfig::default();
        Some(EncoderConfig {
            vocab_size: toy.vocab_size.unwrap_or(d.vocab_size),
            d_model: toy.d_model.unwrap_or(d.d_model),
            heads: self.heads.unwrap_or(d.heads),
            layers: self.layers.unwrap_or(d.layers),
            ffn_dim: toy.ffn_dim.unwrap_or(d.ffn_dim),
            max_len: self.max_len.unwrap_or(d.max_len),
            embed_std: d.embed_std,
        })
    }

    pub fn describe(&self) -> String {
        match (&self.toy, &self.checkpoint, &self.archive) {
            (Some(t), _, _) => format!("toy encoder, seed {}, {:?} weights", t.seed, t.variant).to_lowercase(),
            (_, Some(p), _) => format!("checkpoint {}", p.display()),
            (_, _, Some(p)) => format!("archive {}", p.display()),
            _ => "unspecified".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsSection {
    #[serde(default)]
    pub special_tokens: SpecialPolicy,
    #[serde(default)]
    pub diagonal: DiagonalPolicy,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<MetricKind>,
    #[serde(default = "default_k")]
    pub top_k: usize,
    /// Model compared against; defaults to the first pretrained model.
    #[serde(default)]
    pub baseline: Option<String>,
}

fn default_kinds() -> Vec<MetricKind> {
    vec![MetricKind::ContextToMwe, MetricKind::WithinMwe]
}

fn default_k() -> usize {
    3
}

impl Default for MetricsSection {
    fn default() -> Self {
        MetricsSection {
            special_tokens: SpecialPolicy::default(),
            diagonal: DiagonalPolicy::default(),
            kinds: default_kinds(),
            top_k: default_k(),
            baseline: None,
        }
    }
}

impl MetricsSection {
    pub fn options(&self) -> MetricOptions {
        MetricOptions {
            special: self.special_tokens,
            diagonal: self.diagonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskData {
    pub train: PathBuf,
    #[serde(default)]
    pub dev: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
    #[serde(default)]
    pub train_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneSection {
    #[serde(default)]
    pub base_model: Option<String>,
    #[serde(default = "default_language")]
    pub language: String,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub freeze_layers: usize,
    #[serde(default = "default_held_out")]
    pub dev_size: usize,
    #[serde(default = "default_held_out")]
    pub test_size: usize,
    /// Checkpoints and `registry.json` go here, relative to `output_dir`.
    #[serde(default = "default_checkpoint_dir")]
    pub checkpoint_dir: PathBuf,
    #[serde(default)]
    pub tasks: BTreeMap<Task, TaskData>,
}

fn default_language() -> String {
    "en".into()
}
fn default_epochs() -> usize {
    10
}
fn default_lr() -> f64 {
    3e-3
}
fn default_batch() -> usize {
    8
}
fn default_held_out() -> usize {
    30
}
fn default_checkpoint_dir() -> PathBuf {
    "checkpoints".into()
}

impl Default for FinetuneSection {
    fn default() -> Self {
        FinetuneSection {
            base_model: None,
            language: default_language(),
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            freeze_layers: 0,
            dev_size: default_held_out(),
            test_size: default_held_out(),
            checkpoint_dir: default_checkpoint_dir(),
            tasks: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    #[serde(default)]
    pub style: Style,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Extraction worker threads; absent means one per core.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Per (language, type) subsample size applied after loading.
    #[serde(default)]
    pub balance: Option<usize>,
    #[serde(default)]
    pub corpora: Vec<CorpusEntry>,
    #[serde(default)]
    pub models: Vec<ModelEntry>,
    #[serde(default)]
    pub metrics: MetricsSection,
    #[serde(default)]
    pub finetune: FinetuneSection,
    #[serde(default)]
    pub report: ReportSection,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_output() -> PathBuf {
    "out".into()
}

fn valid_id(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl RunConfig {
    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::from("<inline>"),
            message: e.to_string(),
        })?;
        cfg.base_dir = base_dir.into();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.base_dir = base;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    pub fn checkpoint_dir(&self) -> PathBuf {
        self.output_dir().join(&self.finetune.checkpoint_dir)
    }

    pub fn registry_path(&self) -> PathBuf {
        self.checkpoint_dir().join("registry.json")
    }

    pub fn model(&self, id: &str) -> Option<&ModelEntry> {
        self.models.iter().find(|m| m.id == id)
    }

    pub fn corpus(&self, name: &str) -> Option<&CorpusEntry> {
        self.corpora.iter().find(|c| c.name == name)
    }

    /// The configured baseline, or the first pretrained model.
    pub fn baseline_model(&self) -> Option<&ModelEntry> {
        match &self.metrics.baseline {
            Some(id) => self.model(id),
            None => self.models.iter().find(|m| m.task_tag == TaskTag::Pretrained),
        }
    }

    pub fn task_sources(&self, task: Task) -> Option<TaskSources> {
        self.finetune.tasks.get(&task).map(|d| TaskSources {
            train: self.resolve(&d.train),
            dev: d.dev.as_ref().map(|p| self.resolve(p)),
            test: d.test.as_ref().map(|p| self.resolve(p)),
        })
    }

    /// SHA-256 of the canonical JSON form (paths as written).
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }

    /// Structural checks plus existence of corpus and task data files.
    /// Model checkpoints and archives are checked when loaded, since
    /// `finetune` may create them later.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut errs = Vec::new();
        let mut err = |field: String, message: String| errs.push(FieldError { field, message });

        let mut names = BTreeSet::new();
        for (i, c) in self.corpora.iter().enumerate() {
            let f = format!("corpora[{i}]");
            if !valid_id(&c.name) {
                err(format!("{f}.name"), format!("`{}` must be non-empty [A-Za-z0-9._-]", c.name));
            }
            if !names.insert(&c.name) {
                err(format!("{f}.name"), format!("duplicate corpus name `{}`", c.name));
            }
            if !self.resolve(&c.path).is_file() {
                err(format!("{f}.path"), format!("{} does not exist", c.path.display()));
            }
            if c.format == CorpusFormat::ParallelTsv && c.default_language.is_none() {
                err(format!("{f}.default_language"), "required for tsv corpora".into());
            }
        }

        let mut ids = BTreeSet::new();
        for (i, m) in self.models.iter().enumerate() {
            let f = format!("models[{i}]");
            if !valid_id(&m.id) {
                err(format!("{f}.id"), format!("`{}` must be non-empty [A-Za-z0-9._-]", m.id));
            }
            if !ids.insert(&m.id) {
                err(format!("{f}.id"), format!("duplicate model id `{}`", m.id));
            }
            let sources = [m.toy.is_some(), m.checkpoint.is_some(), m.archive.is_some()];
            if sources.iter().filter(|s| **s).count() != 1 {
                err(f.clone(), "set exactly one of toy, checkpoint, archive".into());
            }
            for (name, v) in [("layers", m.layers), ("heads", m.heads), ("max_len", m.max_len)] {
                if v == Some(0) {
                    err(format!("{f}.{name}"), "must be positive".into());
                }
            }
            if let Some(ec) = m.encoder_config() {
                if let Err(msg) = ec.validate() {
                    err(format!("{f}.toy"), msg);
                }
            }
        }

        let mt = &self.metrics;
        if mt.top_k == 0 {
            err("metrics.top_k".into(), "must be at least 1".into());
        }
        if mt.kinds.is_empty() {
            err("metrics.kinds".into(), "list at least one metric".into());
        }
        if let Some(b) = &mt.baseline {
            if self.model(b).is_none() {
                err("metrics.baseline".into(), format!("unknown model `{b}`"));
            }
        }

        let ft = &self.finetune;
        if let Some(b) = &ft.base_model {
            match self.model(b) {
                None => err("finetune.base_model".into(), format!("unknown model `{b}`")),
                Some(m) if m.archive.is_some() => err(
                    "finetune.base_model".into(),
                    format!("`{b}` is an archive; fine-tuning needs toy weights or a checkpoint"),
                ),
                _ => {}
            }
        }
        if ft.batch_size == 0 {
            err("finetune.batch_size".into(), "must be positive".into());
        }
        if !(ft.learning_rate.is_finite() && ft.learning_rate > 0.0) {
            err("finetune.learning_rate".into(), "must be positive".into());
        }
        for (task, d) in &ft.tasks {
            let f = format!("finetune.tasks.{task}");
            for (name, p) in [("train", Some(&d.train)), ("dev", d.dev.as_ref()), ("test", d.test.as_ref())] {
                if let Some(p) = p {
                    if !self.resolve(p).is_file() {
                        err(format!("{f}.{name}"), format!("{} does not exist", p.display()));
                    }
                }
            }
            if d.train_size == Some(0) {
                err(format!("{f}.train_size"), "must be positive".into());
            }
        }
        if self.workers == Some(0) {
            err("workers".into(), "must be positive".into());
        }
        if self.balance == Some(0) {
            err("balance".into(), "must be positive".into());
        }

        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(errs))
        }
    }
}

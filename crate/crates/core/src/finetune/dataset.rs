//! Task data: source readers, seeded subsampling and the label inventory.
//!
//! Source formats:
//! * DepRel / POS: CoNLL-U.
//! * NER: one `token<TAB>tag` pair per line, blank line between sentences.
//! * Topic: TSV with a header row naming a `text` column and a `label` (or
//!   `category`) column.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conllu::parse_conllu;
use super::{FinetuneError, Task};

pub const UNK_LABEL: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Example {
    /// Word-level labels for token classification.
    Tagged { words: Vec<String>, tags: Vec<String> },
    /// One label per text for sequence classification.
    Text { text: String, label: String },
}

impl Example {
    pub fn labels(&self) -> Vec<&str> {
        match self {
            Example::Tagged { tags, .. } => tags.iter().map(String::as_str).collect(),
            Example::Text { label, .. } => vec![label.as_str()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSources {
    pub train: PathBuf,
    /// When absent, dev and test are drawn from the train file
    /// before the train subsample is drawn.
    #[serde(default)]
    pub dev: Option<PathBuf>,
    #[serde(default)]
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

/// Sorted training labels with [`UNK_LABEL`] reserved at index 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LabelInventory {
    labels: Vec<String>,
}

impl LabelInventory {
    pub fn from_examples(examples: &[Example]) -> Self {
        let set: BTreeSet<&str> = examples.iter().flat_map(Example::labels).collect();
        let mut labels = vec![UNK_LABEL.to_string()];
        labels.extend(set.into_iter().filter(|l| *l != UNK_LABEL).map(str::to_string));
        LabelInventory { labels }
    }

    pub fn from_labels(labels: Vec<String>) -> Result<Self, String> {
        if labels.first().map(String::as_str) != Some(UNK_LABEL) {
            return Err(format!("label inventory must start with {UNK_LABEL}"));
        }
        Ok(LabelInventory { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Index of `label`, or 0 for labels unseen in training.
    pub fn id(&self, label: &str) -> usize {
        self.labels[1..]
            .binary_search_by(|l| l.as_str().cmp(label))
            .map_or(0, |i| i + 1)
    }

    pub fn name(&self, id: usize) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDataset {
    pub task: Task,
    pub language: String,
    pub train: Vec<Example>,
    pub dev: Vec<Example>,
    pub test: Vec<Example>,
    pub labels: LabelInventory,
    pub warnings: Vec<String>,
}

fn read(path: &Path) -> Result<String, FinetuneError> {
    std::fs::read_to_string(path).map_err(|e| FinetuneError::io(path, e))
}

fn parse_ner(content: &str, source: &str) -> Result<Vec<Example>, FinetuneError> {
    let mut out = Vec::new();
    let (mut words, mut tags) = (Vec::new(), Vec::new());
    for (i, line) in content.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !words.is_empty() {
                out.push(Example::Tagged {
                    words: std::mem::take(&mut words),
                    tags: std::mem::take(&mut tags),
                });
            }
            continue;
        }
        let (w, t) = line
            .split_once('\t')
            .or_else(|| line.rsplit_once(' '))
            .ok_or_else(|| FinetuneError::Parse {
                file: source.to_string(),
                line: i + 1,
                message: "expected token and tag".into(),
            })?;
        words.push(w.trim().to_string());
        tags.push(t.trim().to_string());
    }
    if !words.is_empty() {
        out.push(Example::Tagged { words, tags });
    }
    Ok(out)
}

fn parse_topic(content: &str, source: &str) -> Result<Vec<Example>, FinetuneError> {
    let mut lines = content.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let Some((_, header)) = lines.next() else {
        return Ok(Vec::new());
    };
    let cols: Vec<&str> = header.trim_end_matches('\r').split('\t').map(str::trim).collect();
    let find = |names: &[&str]| cols.iter().position(|c| names.contains(c));
    let (Some(ti), Some(li)) = (find(&["text"]), find(&["label", "category"])) else {
        return Err(FinetuneError::Parse {
            file: source.to_string(),
            line: 1,
            message: "header needs a text column and a label or category column".into(),
        });
    };
    lines
        .map(|(i, line)| {
            let fields: Vec<&str> = line.trim_end_matches('\r').split('\t').collect();
            match (fields.get(ti), fields.get(li)) {
                (Some(t), Some(l)) => Ok(Example::Text {
                    text: t.trim().to_string(),
                    label: l.trim().to_string(),
                }),
                _ => Err(FinetuneError::Parse {
                    file: source.to_string(),
                    line: i + 1,
                    message: format!("expected at least {} columns", ti.max(li) + 1),
                }),
            }
        })
        .collect()
}

/// Reads every example of one source file.
pub fn load_examples(task: Task, path: &Path) -> Result<Vec<Example>, FinetuneError> {
    let content = read(path)?;
    let source = path.display().to_string();
    match task {
        Task::Deprel | Task::Pos => Ok(parse_conllu(&content, &source)?
            .into_iter()
            .map(|s| Example::Tagged {
                tags: if task == Task::Pos { s.upos } else { s.deprel },
                words: s.forms,
            })
            .collect()),
        Task::Ner => parse_ner(&content, &source),
        Task::Topic => parse_topic(&content, &source),
    }
}

/// Seeded subsample of `n` items (all of them, with a warning, when fewer
/// are available). Source order is preserved.
fn subsample<T: Clone>(
    items: &[T],
    n: usize,
    rng: &mut ChaCha8Rng,
    split: &str,
    warnings: &mut Vec<String>,
) -> Vec<T> {
    if n >= items.len() {
        if n > items.len() {
            warnings.push(format!(
                "{split}: requested {n} examples, only {} available; using all",
                items.len()
            ));
        }
        return items.to_vec();
    }
    let mut picked = index::sample(rng, items.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| items[i].clone()).collect()
}

/// Draws a held-out split from its own file, or removes it from `pool`.
fn take_split(
    task: Task,
    file: Option<&Path>,
    n: usize,
    split: &str,
    pool: &mut Vec<Example>,
    rng: &mut ChaCha8Rng,
    warnings: &mut Vec<String>,
) -> Result<Vec<Example>, FinetuneError> {
    if let Some(p) = file {
        return Ok(subsample(&load_examples(task, p)?, n, rng, split, warnings));
    }
    let idx: Vec<usize> = (0..pool.len()).collect();
    let taken: BTreeSet<usize> = subsample(&idx, n, rng, split, warnings).into_iter().collect();
    let (out, rest): (Vec<_>, Vec<_>) = pool.drain(..).enumerate().partition(|(i, _)| taken.contains(i));
    *pool = rest.into_iter().map(|(_, e)| e).collect();
    Ok(out.into_iter().map(|(_, e)| e).collect())
}

/// Loads, splits and subsamples task data. A pure function of the source
/// files, `sizes` and `seed`.
pub fn prepare_task_dataset(
    task: Task,
    language: &str,
    sources: &TaskSources,
    sizes: SplitSizes,
    seed: u64,
) -> Result<TaskDataset, FinetuneError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut warnings = Vec::new();
    let mut pool = load_examples(task, &sources.train)?;

    let test = take_split(task, sources.test.as_deref(), sizes.test, "test", &mut pool, &mut rng, &mut warnings)?;
    let dev = take_split(task, sources.dev.as_deref(), sizes.dev, "dev", &mut pool, &mut rng, &mut warnings)?;
    let train = subsample(&pool, sizes.train, &mut rng, "train", &mut warnings);

    let labels = LabelInventory::from_examples(&train);
    let unseen: BTreeMap<&str, usize> = dev
        .iter()
        .chain(&test)
        .flat_map(Example::labels)
        .filter(|l| labels.id(l) == 0)
        .fold(BTreeMap::new(), |mut m, l| {
            *m.entry(l).or_default() += 1;
            m
        });
    if !unseen.is_empty() {
        warnings.push(format!(
            "labels absent from train mapped to {UNK_LABEL}: {}",
            unseen.keys().copied().collect::<Vec<_>>().join(", ")
        ));
    }
    Ok(TaskDataset {
        task,
        language: language.to_string(),
        train,
        dev,
        test,
        labels,
        warnings,
    })
}

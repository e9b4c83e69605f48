//! Fine-tuning probes: task data loading, seeded subsampling, a small
//! training loop for the toy encoder, F1 evaluation and the checkpoint
//! registry.

pub mod conllu;
pub mod dataset;
pub mod f1;
pub mod registry;
pub mod train;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::HeadKind;

pub use dataset::{prepare_task_dataset, Example, LabelInventory, SplitSizes, TaskDataset, TaskSources};
pub use f1::{f1_score, Average};
pub use registry::{append_record, load_checkpoint, read_registry, save_checkpoint, Checkpoint, CheckpointRecord, Registry};
pub use train::{evaluate_f1, majority_baseline_f1, tokenizer_for, train, EpochStats, FinetuneConfig, TrainOutcome};

#[derive(Debug, Error)]
pub enum FinetuneError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid fine-tuning config: {0}")]
    InvalidConfig(String),
    #[error("no examples in {0} split")]
    EmptySplit(&'static str),
    #[error("{task} examples cannot feed a {head:?} head")]
    HeadMismatch { task: Task, head: HeadKind },
    #[error("label inventory mismatch: checkpoint has {checkpoint} labels, head has {head}")]
    LabelMismatch { checkpoint: usize, head: usize },
    #[error("gold and predicted label sequences differ in length ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("loss diverged at epoch {epoch}, step {step}: {loss}")]
    Diverged { epoch: usize, step: usize, loss: f64 },
    #[error("malformed checkpoint {path}: {message}")]
    Checkpoint { path: PathBuf, message: String },
    #[error("registry {path} is locked by another process")]
    RegistryLocked { path: PathBuf },
}

impl FinetuneError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FinetuneError::Io {
            path: path.into(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Deprel,
    Pos,
    Ner,
    Topic,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Deprel, Task::Pos, Task::Ner, Task::Topic];

    pub fn head(self) -> HeadKind {
        match self {
            Task::Topic => HeadKind::SequenceClassification,
            _ => HeadKind::TokenClassification,
        }
    }

    pub fn default_average(self) -> Average {
        match self {
            Task::Topic => Average::Macro,
            _ => Average::Micro,
        }
    }

    /// Labels left out of F1 scoring: the outside tag for NER.
    pub fn ignored_labels(self) -> &'static [&'static str] {
        match self {
            Task::Ner => &["O"],
            _ => &[],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Deprel => "deprel",
            Task::Pos => "pos",
            Task::Ner => "ner",
            Task::Topic => "topic",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "deprel" => Ok(Task::Deprel),
            "pos" => Ok(Task::Pos),
            "ner" => Ok(Task::Ner),
            "topic" => Ok(Task::Topic),
            other => Err(format!("unknown task {other:?} (expected deprel, pos, ner or topic)")),
        }
    }
}

/// Published training-set sizes per language and task.
pub fn reference_train_size(language: &str, task: Task) -> Option<usize> {
    let row: [usize; 4] = match language {
        "en" | "de" | "nl" | "pl" => [5000, 7000, 5000, 701],
        "ru" => [5000, 5400, 7000, 701],
        "uk" => [5496, 5000, 7000, 701],
        _ => return None,
    };
    Some(row[task as usize])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_follows_task() {
        for t in Task::ALL {
            assert_eq!(t.head() == HeadKind::SequenceClassification, t == Task::Topic);
            assert_eq!(t.as_str().parse::<Task>().unwrap(), t);
        }
        assert!("sentiment".parse::<Task>().is_err());
    }

    #[test]
    fn reference_sizes() {
        assert_eq!(reference_train_size("en", Task::Deprel), Some(5000));
        assert_eq!(reference_train_size("en", Task::Pos), Some(7000));
        assert_eq!(reference_train_size("en", Task::Ner), Some(5000));
        assert_eq!(reference_train_size("en", Task::Topic), Some(701));
        assert_eq!(reference_train_size("ru", Task::Pos), Some(5400));
        assert_eq!(reference_train_size("ru", Task::Ner), Some(7000));
        assert_eq!(reference_train_size("uk", Task::Deprel), Some(5496));
        assert_eq!(reference_train_size("fr", Task::Pos), None);
    }
}

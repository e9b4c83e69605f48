//! Checkpoint files and the append-only checkpoint registry.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::dataset::LabelInventory;
use super::{Average, FinetuneError, Task};
use crate::attnio::archive::sha256_hex;
use crate::model::{ClassifierHead, ToyEncoder};
use crate::Scalar;

/// A fine-tuned encoder with its classifier head and frozen label inventory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Checkpoint<F> {
    pub model_id: String,
    pub base_model_id: String,
    pub task: Task,
    pub labels: LabelInventory,
    pub encoder: ToyEncoder<F>,
    pub head: ClassifierHead<F>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRecord {
    pub model_id: String,
    pub base_model_id: String,
    pub task: Task,
    pub language: String,
    /// Test-split F1 of the selected checkpoint, in `[0, 1]`.
    pub f1: f64,
    pub dev_f1: Option<f64>,
    pub average: Average,
    pub seed: u64,
    pub train_size: usize,
    pub dev_size: usize,
    pub test_size: usize,
    pub epochs: usize,
    /// Epoch whose weights were kept (0 = untrained).
    pub best_epoch: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub freeze_layers: usize,
    pub checkpoint: PathBuf,
    pub checkpoint_sha256: String,
    pub encoder_digest: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub records: Vec<CheckpointRecord>,
}

impl Registry {
    pub fn find(&self, model_id: &str) -> Option<&CheckpointRecord> {
        self.records.iter().rev().find(|r| r.model_id == model_id)
    }
}

/// Writes the checkpoint as JSON and returns the SHA-256 of the bytes.
pub fn save_checkpoint<F: Scalar>(ckpt: &Checkpoint<F>, path: &Path) -> Result<String, FinetuneError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| FinetuneError::io(dir, e))?;
    }
    let bytes = serde_json::to_vec(ckpt).map_err(|e| FinetuneError::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    fs::write(path, &bytes).map_err(|e| FinetuneError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<Checkpoint<F>, FinetuneError> {
    let bytes = fs::read(path).map_err(|e| FinetuneError::io(path, e))?;
    let ckpt: Checkpoint<F> = serde_json::from_slice(&bytes).map_err(|e| FinetuneError::Checkpoint {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    if ckpt.labels.len() != ckpt.head.classes() {
        return Err(FinetuneError::LabelMismatch {
            checkpoint: ckpt.labels.len(),
            head: ckpt.head.classes(),
        });
    }
    ckpt.encoder
        .config
        .validate()
        .map_err(|message| FinetuneError::Checkpoint {
            path: path.to_path_buf(),
            message,
        })?;
    Ok(ckpt)
}

/// A missing registry file reads as empty.
pub fn read_registry(path: &Path) -> Result<Registry, FinetuneError> {
    match fs::read(path) {
        Ok(bytes) => serde_json::from_slice(&bytes).map_err(|e| FinetuneError::Checkpoint {
            path: path.to_path_buf(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Registry::default()),
        Err(e) => Err(FinetuneError::io(path, e)),
    }
}

struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

const LOCK_TIMEOUT: Duration = Duration::from_secs(10);

fn lock(path: &Path) -> Result<LockGuard, FinetuneError> {
    let mut lock_path = path.as_os_str().to_owned();
    lock_path.push(".lock");
    let lock_path = PathBuf::from(lock_path);
    let start = Instant::now();
    loop {
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                return Ok(LockGuard(lock_path));
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                if start.elapsed() > LOCK_TIMEOUT {
                    return Err(FinetuneError::RegistryLocked {
                        path: path.to_path_buf(),
                    });
                }
                thread::sleep(Duration::from_millis(20));
            }
            Err(e) => return Err(FinetuneError::io(&lock_path, e)),
        }
    }
}

/// Appends one record under an exclusive lock file (`<registry>.lock`).
/// Existing records are never rewritten.
pub fn append_record(path: &Path, record: CheckpointRecord) -> Result<Registry, FinetuneError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| FinetuneError::io(dir, e))?;
    }
    let _guard = lock(path)?;
    let mut reg = read_registry(path)?;
    reg.records.push(record);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let json = serde_json::to_vec_pretty(&reg).expect("registry serializes");
    fs::write(&tmp, json).map_err(|e| FinetuneError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| FinetuneError::io(path, e))?;
    Ok(reg)
}

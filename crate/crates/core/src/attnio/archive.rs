//! Tensor archive: a directory holding `manifest.json` plus one raw
//! little-endian `f32` file per instance (`<instance_id>.f32`, with unsafe
//! filename chars percent-encoded).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::AttentionStack;
use crate::align::TokenizedSentence;
use crate::Scalar;

pub const MANIFEST: &str = "manifest.json";
pub const FORMAT_VERSION: u32 = 1;
const DTYPE: &str = "f32";

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {source}")]
    Manifest {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("tensor file `{0}` listed in manifest is missing")]
    MissingTensor(String),
    #[error("checksum mismatch for `{file}`: manifest {expected}, file {actual}")]
    ChecksumMismatch {
        file: String,
        expected: String,
        actual: String,
    },
    #[error("`{file}` holds {bytes} bytes, shape {shape:?} needs {expected}")]
    SizeMismatch {
        file: String,
        bytes: usize,
        shape: [usize; 3],
        expected: usize,
    },
    #[error("unsupported dtype `{0}`")]
    Dtype(String),
    #[error("unsupported archive version {0}")]
    Version(u32),
    #[error("entry `{0}`: token metadata length disagrees with tensor shape")]
    Metadata(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub instance_id: String,
    pub file: String,
    pub shape: [usize; 3],
    pub dtype: String,
    pub checksum: String,
    pub tokens: Vec<String>,
    pub offsets: Vec<Option<(usize, usize)>>,
    pub special: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub model_id: String,
    #[serde(default)]
    pub task_tag: Option<String>,
    pub entries: Vec<ManifestEntry>,
}

/// One archived input.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveItem<F> {
    pub instance_id: String,
    pub tokens: TokenizedSentence,
    pub stack: AttentionStack<F>,
}

/// Filename for an instance id: `[A-Za-z0-9._-]` kept, everything else
/// percent-encoded per UTF-8 byte.
pub fn tensor_file_name(instance_id: &str) -> String {
    let mut out = String::new();
    for b in instance_id.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'.' | b'_' | b'-') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out.push_str(".f32");
    out
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ArchiveError + '_ {
    move |source| ArchiveError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn encode_f32<F: Scalar>(values: &[F]) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        let x: f32 = v.cast();
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    bytes
}

pub fn decode_f32(bytes: &[u8]) -> Vec<f32> {
    bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect()
}

/// Writes every item's tensor, then the manifest. Existing files with the
/// same names are overwritten.
pub fn write_archive<F: Scalar>(
    items: &[ArchiveItem<F>],
    dir: impl AsRef<Path>,
    model_id: &str,
    task_tag: Option<&str>,
) -> Result<Manifest, ArchiveError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(items.len());
    for item in items {
        let file = tensor_file_name(&item.instance_id);
        let bytes = encode_f32(&item.stack.values);
        let path = dir.join(&file);
        fs::write(&path, &bytes).map_err(io_err(&path))?;
        entries.push(ManifestEntry {
            instance_id: item.instance_id.clone(),
            file,
            shape: item.stack.shape(),
            dtype: DTYPE.to_string(),
            checksum: sha256_hex(&bytes),
            tokens: item.tokens.tokens.clone(),
            offsets: item.tokens.offsets.clone(),
            special: item.tokens.special.clone(),
        });
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        model_id: model_id.to_string(),
        task_tag: task_tag.map(String::from),
        entries,
    };
    let path = dir.join(MANIFEST);
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&path, json).map_err(io_err(&path))?;
    Ok(manifest)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest, ArchiveError> {
    let path = dir.as_ref().join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(io_err(&path))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|source| ArchiveError::Manifest {
            path: path.clone(),
            source,
        })?;
    if manifest.version != FORMAT_VERSION {
        return Err(ArchiveError::Version(manifest.version));
    }
    Ok(manifest)
}

/// Reads and verifies every tensor listed in the manifest.
pub fn read_archive(
    dir: impl AsRef<Path>,
) -> Result<(Manifest, Vec<ArchiveItem<f32>>), ArchiveError> {
    let dir = dir.as_ref();
    let manifest = read_manifest(dir)?;
    let mut items = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        if e.dtype != DTYPE {
            return Err(ArchiveError::Dtype(e.dtype.clone()));
        }
        let path = dir.join(&e.file);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(err) if err.kind() == std::io::ErrorKind::NotFound => {
                return Err(ArchiveError::MissingTensor(e.file.clone()))
            }
            Err(err) => return Err(io_err(&path)(err)),
        };
        let actual = sha256_hex(&bytes);
        if actual != e.checksum {
            return Err(ArchiveError::ChecksumMismatch {
                file: e.file.clone(),
                expected: e.checksum.clone(),
                actual,
            });
        }
        let expected = e.shape.iter().product::<usize>() * 4;
        if bytes.len() != expected || e.shape[1] != e.shape[2] {
            return Err(ArchiveError::SizeMismatch {
                file: e.file.clone(),
                bytes: bytes.len(),
                shape: e.shape,
                expected,
            });
        }
        let t = e.shape[1];
        if e.tokens.len() != t || e.offsets.len() != t || e.special.len() != t {
            return Err(ArchiveError::Metadata(e.instance_id.clone()));
        }
        items.push(ArchiveItem {
            instance_id: e.instance_id.clone(),
            tokens: TokenizedSentence {
                tokens: e.tokens.clone(),
                offsets: e.offsets.clone(),
                special: e.special.clone(),
            },
            stack: AttentionStack {
                layers: e.shape[0],
                seq_len: t,
                values: decode_f32(&bytes),
            },
        });
    }
    Ok((manifest, items))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(id: &str, layers: usize, t: usize) -> ArchiveItem<f32> {
        let tokens = TokenizedSentence {
            tokens: (0..t).map(|i| format!("w{i}")).collect(),
            offsets: (0..t).map(|i| Some((i, i + 1))).collect(),
            special: vec![false; t],
        };
        let values = vec![1.0 / t as f32; layers * t * t];
        ArchiveItem {
            instance_id: id.into(),
            tokens,
            stack: AttentionStack::new(layers, t, values).unwrap(),
        }
    }

    #[test]
    fn empty_archive() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_archive::<f32>(&[], dir.path(), "toy", None).unwrap();
        assert!(m.entries.is_empty());
        let (_, items) = read_archive(dir.path()).unwrap();
        assert!(items.is_empty());
    }

    #[test]
    fn single_instance_size_arithmetic() {
        let dir = tempfile::tempdir().unwrap();
        let m = write_archive(&[item("en-001", 2, 4)], dir.path(), "toy", Some("pretrained")).unwrap();
        assert_eq!(m.entries[0].shape, [2, 4, 4]);
        let len = fs::metadata(dir.path().join("en-001.f32")).unwrap().len();
        assert_eq!(len, 2 * 4 * 4 * 4);
        let (m2, items) = read_archive(dir.path()).unwrap();
        assert_eq!(m, m2);
        assert_eq!(items, vec![item("en-001", 2, 4)]);
    }

    #[test]
    fn corrupted_tensor_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        write_archive(&[item("a", 1, 3)], dir.path(), "toy", None).unwrap();
        let p = dir.path().join("a.f32");
        let mut bytes = fs::read(&p).unwrap();
        bytes[0] ^= 1;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(
            read_archive(dir.path()),
            Err(ArchiveError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn missing_tensor_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        write_archive(&[item("a", 1, 3)], dir.path(), "toy", None).unwrap();
        fs::remove_file(dir.path().join("a.f32")).unwrap();
        assert!(matches!(
            read_archive(dir.path()),
            Err(ArchiveError::MissingTensor(f)) if f == "a.f32"
        ));
    }

    #[test]
    fn file_names_are_path_safe() {
        assert_eq!(tensor_file_name("en-001"), "en-001.f32");
        assert_eq!(tensor_file_name("../x y"), "..%2Fx%20y.f32");
        assert_eq!(tensor_file_name("всё"), "%D0%B2%D1%81%D1%91.f32");
    }
}

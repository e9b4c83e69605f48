//! MWE-annotated corpora: the canonical record type, validation, and the
//! JSONL / BIO / parallel-TSV converters.
//!
//! Canonical JSONL with explicit char spans is the interchange format. BIO and
//! parallel TSV exist because the source datasets ship in those shapes.

mod bio;
mod jsonl;
pub mod text;
mod tsv;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use text::{char_len, char_slice, collapse_whitespace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MweType {
    Idiom,
    Msu,
}

impl MweType {
    pub fn as_str(self) -> &'static str {
        match self {
            MweType::Idiom => "idiom",
            MweType::Msu => "msu",
        }
    }
}

impl fmt::Display for MweType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MweType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "idiom" => Ok(MweType::Idiom),
            "msu" => Ok(MweType::Msu),
            other => Err(format!("unknown MWE type `{other}`")),
        }
    }
}

/// Half-open char range `[start, end)`; serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Span(pub usize, pub usize);

impl Span {
    pub fn start(self) -> usize {
        self.0
    }

    pub fn end(self) -> usize {
        self.1
    }

    pub fn len(self) -> usize {
        self.1.saturating_sub(self.0)
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    /// Number of chars shared with `[start, end)`.
    pub fn overlap(self, start: usize, end: usize) -> usize {
        self.1.min(end).saturating_sub(self.0.max(start))
    }
}

/// One annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweInstance {
    pub id: String,
    pub language: String,
    pub text: String,
    pub mwe_type: MweType,
    pub spans: Vec<Span>,
    pub surface: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translation: Option<String>,
}

impl MweInstance {
    /// Text covered by each span, in order.
    pub fn span_texts(&self) -> Vec<String> {
        self.spans
            .iter()
            .map(|s| char_slice(&self.text, s.start(), s.end()))
            .collect()
    }

    pub fn is_contiguous(&self) -> bool {
        self.spans.len() == 1
    }

    /// Checks every record-level invariant.
    pub fn validate(&self, opts: &LoadOptions) -> Result<(), RecordErrorKind> {
        if self.id.trim().is_empty() {
            return Err(RecordErrorKind::MissingId);
        }
        if !opts.languages.is_empty() && !opts.languages.iter().any(|l| l == &self.language) {
            return Err(RecordErrorKind::UnknownLanguage(self.language.clone()));
        }
        if self.spans.is_empty() {
            return Err(RecordErrorKind::NoSpans);
        }
        let len = char_len(&self.text);
        let mut prev_end: Option<usize> = None;
        for &span in &self.spans {
            if span.end() < span.start() {
                return Err(RecordErrorKind::InvertedSpan(span));
            }
            if span.is_empty() {
                return Err(RecordErrorKind::EmptySpan(span));
            }
            if span.end() > len {
                return Err(RecordErrorKind::SpanOutOfBounds { span, len });
            }
            if let Some(p) = prev_end {
                if span.start() < p {
                    return Err(RecordErrorKind::OverlappingSpans(span));
                }
            }
            prev_end = Some(span.end());
        }
        let found = opts.casing.normalize(&self.span_texts().join(" "));
        let expected = opts.casing.normalize(&self.surface);
        if found != expected {
            return Err(RecordErrorKind::SurfaceMismatch { expected, found });
        }
        Ok(())
    }
}

/// How surfaces are compared against span text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CasingPolicy {
    #[default]
    Sensitive,
    Insensitive,
}

impl CasingPolicy {
    pub fn normalize(self, s: &str) -> String {
        let s = collapse_whitespace(s);
        match self {
            CasingPolicy::Sensitive => s,
            CasingPolicy::Insensitive => s.to_lowercase(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq, Eq)]
pub struct CorpusMetadata {
    pub name: String,
    pub languages: Vec<String>,
    pub type_counts: BTreeMap<MweType, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub instances: Vec<MweInstance>,
    pub metadata: CorpusMetadata,
}

impl Corpus {
    /// Builds a corpus, rejecting duplicate ids.
    pub fn new(name: impl Into<String>, instances: Vec<MweInstance>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::new();
        for inst in &instances {
            if !seen.insert(inst.id.as_str()) {
                return Err(CorpusError::DuplicateId(inst.id.clone()));
            }
        }
        let metadata = CorpusMetadata::summarize(name.into(), &instances);
        Ok(Corpus {
            instances,
            metadata,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn name(&self) -> &str {
        &self.metadata.name
    }
}

impl CorpusMetadata {
    fn summarize(name: String, instances: &[MweInstance]) -> Self {
        let languages: BTreeSet<_> = instances.iter().map(|i| i.language.clone()).collect();
        let mut type_counts = BTreeMap::new();
        for inst in instances {
            *type_counts.entry(inst.mwe_type).or_insert(0) += 1;
        }
        CorpusMetadata {
            name,
            languages: languages.into_iter().collect(),
            type_counts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorpusFormat {
    #[serde(alias = "jsonl")]
    CanonicalJsonl,
    #[serde(alias = "bio")]
    BioTagged,
    #[serde(alias = "tsv")]
    ParallelTsv,
}

impl FromStr for CorpusFormat {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical_jsonl" | "jsonl" => Ok(CorpusFormat::CanonicalJsonl),
            "bio_tagged" | "bio" => Ok(CorpusFormat::BioTagged),
            "parallel_tsv" | "tsv" => Ok(CorpusFormat::ParallelTsv),
            other => Err(CorpusError::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusFormat::CanonicalJsonl => "canonical_jsonl",
            CorpusFormat::BioTagged => "bio_tagged",
            CorpusFormat::ParallelTsv => "parallel_tsv",
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Allowed language codes; empty accepts any.
    pub languages: Vec<String>,
    pub casing: CasingPolicy,
    /// Language assigned to records whose format does not carry one.
    pub default_language: Option<String>,
    pub default_mwe_type: MweType,
    pub name: String,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            languages: Vec::new(),
            casing: CasingPolicy::Sensitive,
            default_language: None,
            default_mwe_type: MweType::Msu,
            name: "corpus".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordErrorKind {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("missing id")]
    MissingId,
    #[error("unknown language `{0}`")]
    UnknownLanguage(String),
    #[error("no spans")]
    NoSpans,
    #[error("inverted span [{}, {}]", .0.start(), .0.end())]
    InvertedSpan(Span),
    #[error("empty span [{}, {}]", .0.start(), .0.end())]
    EmptySpan(Span),
    #[error("span [{}, {}] out of bounds for text of length {len}", .span.start(), .span.end())]
    SpanOutOfBounds { span: Span, len: usize },
    #[error("overlapping or unsorted span [{}, {}]", .0.start(), .0.end())]
    OverlappingSpans(Span),
    #[error("surface mismatch: annotated `{expected}`, spans cover `{found}`")]
    SurfaceMismatch { expected: String, found: String },
    #[error("surface `{0}` not found in sentence")]
    SurfaceNotFound(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
}

/// A rejected record: its location, id if known, and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordError {
    pub line: usize,
    pub id: Option<String>,
    pub message: String,
    #[serde(skip)]
    pub kind: RecordErrorKind,
}

impl RecordError {
    pub fn new(line: usize, id: Option<String>, kind: RecordErrorKind) -> Self {
        RecordError {
            line,
            id,
            message: kind.to_string(),
            kind,
        }
    }
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.id {
            Some(id) => write!(f, "line {} ({id}): {}", self.line, self.message),
            None => write!(f, "line {}: {}", self.line, self.message),
        }
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("unknown corpus format `{0}`")]
    UnknownFormat(String),
    #[error("empty corpus")]
    Empty,
    #[error("duplicate instance id `{0}`")]
    DuplicateId(String),
    #[error("{0}")]
    MissingOption(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Result of loading: the valid instances plus everything that was rejected.
#[derive(Debug, Clone)]
pub struct LoadOutcome {
    pub corpus: Corpus,
    pub errors: Vec<RecordError>,
    pub warnings: Vec<String>,
}

/// Serialized corpus plus per-instance conversion warnings.
#[derive(Debug, Clone)]
pub struct Converted {
    pub bytes: Vec<u8>,
    pub warnings: Vec<String>,
}

/// Intermediate produced by format parsers before corpus-level checks.
pub(crate) struct Parsed {
    pub records: Vec<(usize, MweInstance)>,
    pub errors: Vec<RecordError>,
    pub warnings: Vec<String>,
    pub n_records: usize,
}

pub fn load_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    opts: &LoadOptions,
) -> Result<LoadOutcome, CorpusError> {
    let path = path.as_ref();
    let content = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_corpus(&content, format, opts)
}

/// Parses corpus text in `format`. Invalid records end up in
/// [`LoadOutcome::errors`]; a file with no valid records is fatal.
pub fn parse_corpus(
    content: &str,
    format: CorpusFormat,
    opts: &LoadOptions,
) -> Result<LoadOutcome, CorpusError> {
    let parsed = match format {
        CorpusFormat::CanonicalJsonl => jsonl::parse(content),
        CorpusFormat::BioTagged => bio::parse(content, opts)?,
        CorpusFormat::ParallelTsv => tsv::parse(content, opts)?,
    };
    if parsed.n_records == 0 {
        return Err(CorpusError::Empty);
    }
    let mut errors = parsed.errors;
    let mut seen = HashSet::new();
    let mut instances = Vec::new();
    for (line, inst) in parsed.records {
        if let Err(kind) = inst.validate(opts) {
            errors.push(RecordError::new(line, Some(inst.id.clone()), kind));
            continue;
        }
        if !seen.insert(inst.id.clone()) {
            errors.push(RecordError::new(
                line,
                Some(inst.id.clone()),
                RecordErrorKind::DuplicateId(inst.id.clone()),
            ));
            continue;
        }
        instances.push(inst);
    }
    if instances.is_empty() {
        return Err(CorpusError::Empty);
    }
    errors.sort_by_key(|e| e.line);
    Ok(LoadOutcome {
        corpus: Corpus::new(opts.name.clone(), instances)?,
        errors,
        warnings: parsed.warnings,
    })
}

pub fn convert_corpus(corpus: &Corpus, target: CorpusFormat) -> Result<Converted, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    Ok(match target {
        CorpusFormat::CanonicalJsonl => jsonl::write(corpus),
        CorpusFormat::BioTagged => bio::write(corpus),
        CorpusFormat::ParallelTsv => tsv::write(corpus),
    })
}

/// Seeded uniform subsample of at most `n` instances per (language, type)
/// group. Original order is preserved. Groups smaller than `n` are kept whole
/// and reported in the returned warnings.
pub fn balance(corpus: &Corpus, n: usize, seed: u64) -> (Corpus, Vec<String>) {
    let mut groups: BTreeMap<(String, MweType), Vec<usize>> = BTreeMap::new();
    for (i, inst) in corpus.instances.iter().enumerate() {
        groups
            .entry((inst.language.clone(), inst.mwe_type))
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = BTreeSet::new();
    let mut warnings = Vec::new();
    for ((lang, ty), members) in &groups {
        if members.len() <= n {
            if members.len() < n {
                warnings.push(format!(
                    "{lang}/{ty}: only {} instances available, requested {n}",
                    members.len()
                ));
            }
            keep.extend(members.iter().copied());
        } else {
            keep.extend(
                index::sample(&mut rng, members.len(), n)
                    .into_iter()
                    .map(|j| members[j]),
            );
        }
    }
    let instances = keep
        .into_iter()
        .map(|i| corpus.instances[i].clone())
        .collect();
    let out = Corpus::new(corpus.metadata.name.clone(), instances)
        .expect("subset of a valid corpus has unique ids");
    (out, warnings)
}

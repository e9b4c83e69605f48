use std::path::PathBuf;

use thiserror::Error;

use crate::align::AlignError;
use crate::attnio::archive::ArchiveError;
use crate::attnio::AttnError;
use crate::config::ConfigError;
use crate::corpus::CorpusError;
use crate::finetune::FinetuneError;
use crate::metrics::MetricError;
use crate::report::ReportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Top-level error for pipeline commands.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Align(#[from] AlignError),
    #[error(transparent)]
    Attention(#[from] AttnError),
    #[error(transparent)]
    Archive(#[from] ArchiveError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Finetune(#[from] FinetuneError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category, used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Corpus(_) => "corpus",
            Error::Align(_) => "align",
            Error::Attention(_) => "attention",
            Error::Archive(_) => "archive",
            Error::Metric(_) => "metric",
            Error::Finetune(_) => "finetune",
            Error::Report(_) => "report",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json { .. } => "json",
        }
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

//! Layer-wise attention analysis for multiword expressions (idioms and
//! microsyntactic units) in encoder-only transformers.
//!
//! The pipeline runs corpus ingestion, subword span alignment, attention
//! extraction with head averaging, per-layer metrics, fine-tuning probes and
//! report emission. All numeric code is generic over [`Scalar`]; the aliases
//! at the bottom of this file fix the common `f32` / `f64` instantiations.

pub mod align;
pub mod attnio;
pub mod config;
pub mod corpus;
pub mod error;
pub mod finetune;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod report;
pub mod scalar;
pub mod tokenizer;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Head-averaged attention as stored in tensor archives.
pub type AttentionStack32 = attnio::AttentionStack<f32>;
/// Head-averaged attention in double precision, used for metric evaluation.
pub type AttentionStack64 = attnio::AttentionStack<f64>;
/// Raw per-head attention produced by single-precision runners.
pub type RawAttention32 = attnio::RawAttention<f32>;
pub type RawAttention64 = attnio::RawAttention<f64>;
/// Corpus-level curves and comparisons in double precision.
pub type LayerCurve64 = metrics::LayerCurve<f64>;
pub type ComparisonResult64 = metrics::ComparisonResult<f64>;
pub type TopKTable64 = metrics::TopKTable<f64>;
/// Toy encoder used by the default runner and fine-tuning harness.
pub type ToyEncoder32 = model::ToyEncoder<f32>;
pub type ToyEncoder64 = model::ToyEncoder<f64>;
pub type ToyRunner32 = model::ToyRunner<f32>;

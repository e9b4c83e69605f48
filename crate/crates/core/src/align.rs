//! Maps MWE char spans onto subword token indices.
//!
//! All subwords overlapping an MWE are selected and later treated as one unit
//! by the metrics (their attention mass is summed); no word-level re-merging
//! happens here.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::MweInstance;

/// Subword tokens of one sentence with char offsets. Special tokens carry no
/// offsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSentence {
    pub tokens: Vec<String>,
    pub offsets: Vec<Option<(usize, usize)>>,
    pub special: Vec<bool>,
}

impl TokenizedSentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn special_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.special[i]).collect()
    }

    pub fn non_special_count(&self) -> usize {
        self.special.iter().filter(|s| !**s).count()
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<(), AlignError> {
        let t = self.tokens.len();
        if self.offsets.len() != t || self.special.len() != t {
            return Err(AlignError::InvalidTokenization(format!(
                "{} tokens, {} offsets, {} special flags",
                t,
                self.offsets.len(),
                self.special.len()
            )));
        }
        let regular: Vec<usize> = (0..t).filter(|&i| !self.special[i]).collect();
        if regular.is_empty() {
            return Err(AlignError::InvalidTokenization("no non-special tokens".into()));
        }
        if regular.iter().all(|&i| self.offsets[i].is_none()) {
            return Err(AlignError::MissingOffsets);
        }
        let mut prev_start = 0;
        for &i in &regular {
            let (s, e) = self.offsets[i].ok_or_else(|| {
                AlignError::InvalidTokenization(format!("token {i} has no offsets"))
            })?;
            if s > e || s < prev_start {
                return Err(AlignError::InvalidTokenization(format!(
                    "token {i} offsets ({s}, {e}) out of order"
                )));
            }
            prev_start = s;
        }
        Ok(())
    }

    /// Substring spanned by the union of the given tokens' offsets.
    pub fn offset_union_text(&self, text: &str, indices: &[usize]) -> Option<String> {
        let ranges: Vec<_> = indices.iter().filter_map(|&i| self.offsets[i]).collect();
        let start = ranges.iter().map(|r| r.0).min()?;
        let end = ranges.iter().map(|r| r.1).max()?;
        Some(crate::corpus::text::char_slice(text, start, end))
    }
}

/// Minimum char overlap for a token to count as part of an MWE.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapPolicy {
    pub min_overlap_chars: usize,
}

impl Default for OverlapPolicy {
    fn default() -> Self {
        OverlapPolicy {
            min_overlap_chars: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MweAlignment {
    pub instance_id: String,
    pub token_indices: Vec<usize>,
    pub contiguous: bool,
    pub fully_covered: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignError {
    #[error("{instance_id}: no token overlaps the MWE")]
    NoOverlap { instance_id: String },
    #[error("{instance_id}: span truncated by the model's max length")]
    SpanTruncated { instance_id: String },
    #[error("{instance_id}: MWE covers every non-special token, no context left")]
    ContextEmpty { instance_id: String },
    #[error("tokenizer produced no offsets; cannot align spans")]
    MissingOffsets,
    #[error("invalid tokenization: {0}")]
    InvalidTokenization(String),
    #[error("overlap threshold must be at least 1 char")]
    InvalidPolicy,
}

impl AlignError {
    /// Per-instance errors are skipped and counted; the rest abort the run.
    pub fn is_skippable(&self) -> bool {
        matches!(
            self,
            AlignError::NoOverlap { .. }
                | AlignError::SpanTruncated { .. }
                | AlignError::ContextEmpty { .. }
        )
    }

    pub fn reason(&self) -> &'static str {
        match self {
            AlignError::NoOverlap { .. } => "no_overlap",
            AlignError::SpanTruncated { .. } => "span_truncated",
            AlignError::ContextEmpty { .. } => "context_empty",
            AlignError::MissingOffsets => "missing_offsets",
            AlignError::InvalidTokenization(_) => "invalid_tokenization",
            AlignError::InvalidPolicy => "invalid_policy",
        }
    }
}

pub fn align(
    instance: &MweInstance,
    tok: &TokenizedSentence,
    policy: OverlapPolicy,
) -> Result<MweAlignment, AlignError> {
    if policy.min_overlap_chars == 0 {
        return Err(AlignError::InvalidPolicy);
    }
    tok.validate()?;
    let chars: Vec<char> = instance.text.chars().collect();
    let regular: Vec<(usize, (usize, usize))> = (0..tok.len())
        .filter(|&i| !tok.special[i])
        .filter_map(|i| tok.offsets[i].map(|o| (i, o)))
        .collect();

    let covered_end = regular.iter().map(|(_, (_, e))| *e).max().unwrap_or(0);
    let truncated = instance.spans.iter().any(|span| {
        let mut end = span.end().min(chars.len());
        while end > span.start() && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        end > covered_end
    });
    if truncated {
        return Err(AlignError::SpanTruncated {
            instance_id: instance.id.clone(),
        });
    }

    let token_indices: Vec<usize> = regular
        .iter()
        .filter(|(_, (s, e))| {
            instance
                .spans
                .iter()
                .any(|span| span.overlap(*s, *e) >= policy.min_overlap_chars)
        })
        .map(|(i, _)| *i)
        .collect();
    if token_indices.is_empty() {
        return Err(AlignError::NoOverlap {
            instance_id: instance.id.clone(),
        });
    }

    let contiguous = token_indices.last().unwrap() - token_indices[0] + 1 == token_indices.len();
    let fully_covered = instance.spans.iter().all(|span| {
        (span.start()..span.end().min(chars.len()))
            .filter(|&c| !chars[c].is_whitespace())
            .all(|c| {
                token_indices.iter().any(|&i| {
                    let (s, e) = tok.offsets[i].expect("selected tokens have offsets");
                    s <= c && c < e
                })
            })
    });
    Ok(MweAlignment {
        instance_id: instance.id.clone(),
        token_indices,
        contiguous,
        fully_covered,
    })
}

/// Non-special token indices outside the MWE.
pub fn context_indices(
    tok: &TokenizedSentence,
    alignment: &MweAlignment,
) -> Result<Vec<usize>, AlignError> {
    let ctx: Vec<usize> = (0..tok.len())
        .filter(|&i| !tok.special[i] && alignment.token_indices.binary_search(&i).is_err())
        .collect();
    if ctx.is_empty() {
        return Err(AlignError::ContextEmpty {
            instance_id: alignment.instance_id.clone(),
        });
    }
    Ok(ctx)
}

/// One line of the alignment report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentRecord {
    pub instance_id: String,
    pub token_indices: Vec<usize>,
    pub contiguous: bool,
    pub fully_covered: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skipped_reason: Option<String>,
}

impl AlignmentRecord {
    pub fn from_result(instance_id: &str, result: &Result<MweAlignment, AlignError>) -> Self {
        match result {
            Ok(a) => AlignmentRecord {
                instance_id: a.instance_id.clone(),
                token_indices: a.token_indices.clone(),
                contiguous: a.contiguous,
                fully_covered: a.fully_covered,
                skipped_reason: None,
            },
            Err(e) => AlignmentRecord {
                instance_id: instance_id.to_string(),
                token_indices: Vec::new(),
                contiguous: false,
                fully_covered: false,
                skipped_reason: Some(e.reason().to_string()),
            },
        }
    }
}

//! Attention tensors: the runner contract, head averaging, row-stochastic
//! validation, and the on-disk archive.

pub mod archive;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::TokenizedSentence;
use crate::Scalar;

/// Row-sum tolerance for softmax outputs.
pub const ROW_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttnError {
    #[error("attention has zero heads")]
    NoHeads,
    #[error("tensor has {got} values, shape {shape:?} needs {expected}")]
    ShapeMismatch {
        shape: Vec<usize>,
        expected: usize,
        got: usize,
    },
    #[error("{count} rows are not stochastic within {tol} (first at {first:?}, sum {sum})")]
    NotRowStochastic {
        count: usize,
        first: Vec<usize>,
        sum: f64,
        tol: f64,
    },
    #[error("value {value} outside [0, 1] at {index:?}")]
    OutOfRange { index: Vec<usize>, value: f64 },
    #[error("runner tokenized {tokenized} tokens but attended over {attended}")]
    LengthDisagreement { tokenized: usize, attended: usize },
    #[error("runner failure: {0}")]
    Runner(String),
}

/// Per-head attention, `layers × heads × seq_len × seq_len`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RawAttention<F> {
    pub layers: usize,
    pub heads: usize,
    pub seq_len: usize,
    pub values: Vec<F>,
}

/// Head-averaged attention, `layers × seq_len × seq_len`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionStack<F> {
    pub layers: usize,
    pub seq_len: usize,
    pub values: Vec<F>,
}

fn check_len(shape: &[usize], got: usize) -> Result<(), AttnError> {
    let expected: usize = shape.iter().product();
    if expected != got {
        return Err(AttnError::ShapeMismatch {
            shape: shape.to_vec(),
            expected,
            got,
        });
    }
    Ok(())
}

fn check_tensor<F: Scalar>(shape: &[usize], values: &[F], tol: f64) -> Result<(), AttnError> {
    if let Some((i, v)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v >= F::zero() && **v <= F::one()))
    {
        return Err(AttnError::OutOfRange {
            index: unravel(i, shape),
            value: v.as_f64(),
        });
    }
    let violations = validate_rows(shape, values, tol);
    if let Some(first) = violations.first() {
        return Err(AttnError::NotRowStochastic {
            count: violations.len(),
            first: first.index.clone(),
            sum: first.sum,
            tol,
        });
    }
    Ok(())
}

impl<F: Scalar> RawAttention<F> {
    pub fn new(layers: usize, heads: usize, seq_len: usize, values: Vec<F>) -> Result<Self, AttnError> {
        check_len(&[layers, heads, seq_len, seq_len], values.len())?;
        Ok(RawAttention {
            layers,
            heads,
            seq_len,
            values,
        })
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.layers, self.heads, self.seq_len, self.seq_len]
    }

    #[inline]
    pub fn get(&self, l: usize, h: usize, q: usize, k: usize) -> F {
        let t = self.seq_len;
        self.values[((l * self.heads + h) * t + q) * t + k]
    }

    /// Value range and row sums.
    pub fn validate(&self, tol: f64) -> Result<(), AttnError> {
        check_tensor(&self.shape(), &self.values, tol)
    }
}

impl<F: Scalar> AttentionStack<F> {
    pub fn new(layers: usize, seq_len: usize, values: Vec<F>) -> Result<Self, AttnError> {
        check_len(&[layers, seq_len, seq_len], values.len())?;
        Ok(AttentionStack {
            layers,
            seq_len,
            values,
        })
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.layers, self.seq_len, self.seq_len]
    }

    /// The `T×T` matrix of layer `l` (0-based), row-major.
    pub fn layer(&self, l: usize) -> &[F] {
        let n = self.seq_len * self.seq_len;
        &self.values[l * n..(l + 1) * n]
    }

    pub fn validate(&self, tol: f64) -> Result<(), AttnError> {
        check_tensor(&self.shape(), &self.values, tol)
    }

    pub fn cast<G: Scalar>(&self) -> AttentionStack<G> {
        AttentionStack {
            layers: self.layers,
            seq_len: self.seq_len,
            values: self.values.iter().map(|v| v.cast()).collect(),
        }
    }
}

/// Mean over heads: `out[l, q, k] = (1/H) Σ_h raw[l, h, q, k]`.
pub fn head_average<F: Scalar>(raw: &RawAttention<F>) -> Result<AttentionStack<F>, AttnError> {
    if raw.heads == 0 {
        return Err(AttnError::NoHeads);
    }
    let tt = raw.seq_len * raw.seq_len;
    let h = F::from_usize_lossy(raw.heads);
    let mut values = vec![F::zero(); raw.layers * tt];
    for (l, out) in values.chunks_mut(tt.max(1)).enumerate().take(raw.layers) {
        for head in raw.values[l * raw.heads * tt..(l + 1) * raw.heads * tt].chunks(tt) {
            for (o, v) in out.iter_mut().zip(head) {
                *o = *o + *v;
            }
        }
        for o in out.iter_mut() {
            *o = *o / h;
        }
    }
    AttentionStack::new(raw.layers, raw.seq_len, values)
}

/// A row whose sum is off by more than the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowViolation {
    /// Multi-index of the row over all leading axes.
    pub index: Vec<usize>,
    pub sum: f64,
}

fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for (d, &n) in shape.iter().enumerate().rev() {
        if n > 0 {
            idx[d] = flat % n;
            flat /= n;
        }
    }
    idx
}

/// Every row (trailing axis = keys) with `|sum − 1| > tol`. Report-only.
pub fn validate_rows<F: Scalar>(shape: &[usize], values: &[F], tol: f64) -> Vec<RowViolation> {
    let Some((&keys, lead)) = shape.split_last() else {
        return Vec::new();
    };
    if keys == 0 {
        return Vec::new();
    }
    values
        .chunks(keys)
        .enumerate()
        .filter_map(|(r, row)| {
            let sum: f64 = row.iter().map(|v| v.as_f64()).sum();
            ((sum - 1.0).abs() > tol || sum.is_nan()).then(|| RowViolation {
                index: unravel(r, lead),
                sum,
            })
        })
        .collect()
}

/// Inference backend contract: anything that yields offsets and per-head
/// attention for a sentence.
pub trait ModelRunner<F: Scalar>: Send + Sync {
    fn model_id(&self) -> &str;
    fn num_layers(&self) -> usize;
    fn num_heads(&self) -> usize;
    fn max_len(&self) -> usize;
    fn tokenize(&self, text: &str) -> TokenizedSentence;
    fn attend(&self, text: &str) -> Result<RawAttention<F>, AttnError>;

    /// Tokenizes and attends, checking that both agree on `T`.
    fn run(&self, text: &str) -> Result<(TokenizedSentence, RawAttention<F>), AttnError> {
        let tok = self.tokenize(text);
        let raw = self.attend(text)?;
        if raw.seq_len != tok.len() {
            return Err(AttnError::LengthDisagreement {
                tokenized: tok.len(),
                attended: raw.seq_len,
            });
        }
        Ok((tok, raw))
    }
}

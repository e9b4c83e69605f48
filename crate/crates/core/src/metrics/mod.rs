//! Layer-wise attention metrics over MWE token sets.
//!
//! Both metrics report a percentage: the mean, over query tokens, of the
//! attention mass a query row puts on the MWE columns, times 100.
//!
//! * context → MWE: queries are the non-special tokens outside the MWE.
//! * within MWE: queries are the MWE tokens, keys the *other* MWE tokens.
//!
//! Special tokens are excluded from queries and keys. By default rows are not
//! renormalized after that exclusion; [`SpecialPolicy::Renormalize`] divides
//! each row's MWE mass by its mass over non-special keys instead.

mod rank;

pub use rank::{top_k, zone, TopKEntry, TopKTable, Zone};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::{context_indices, MweAlignment, TokenizedSentence};
use crate::attnio::AttentionStack;
use crate::corpus::MweType;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("context token set is empty")]
    ContextEmpty,
    #[error("MWE token set is empty")]
    EmptyMwe,
    #[error("MWE has a single token after tokenization")]
    SingleTokenMwe,
    #[error("token index {index} out of range for T={seq_len}")]
    IndexOutOfRange { index: usize, seq_len: usize },
    #[error("MWE and context sets overlap at token {0}")]
    NotDisjoint(usize),
    #[error("no curves to aggregate")]
    NoCurves,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("k must be at least 1")]
    InvalidK,
    #[error("k={k} exceeds layer count {layers}")]
    KTooLarge { k: usize, layers: usize },
}

impl MetricError {
    /// Errors that skip an instance rather than abort the run.
    pub fn is_skippable(&self) -> bool {
        matches!(self, MetricError::ContextEmpty | MetricError::SingleTokenMwe)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    ContextToMwe,
    WithinMwe,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::ContextToMwe => "context_to_mwe",
            MetricKind::WithinMwe => "within_mwe",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "context_to_mwe" => Ok(MetricKind::ContextToMwe),
            "within_mwe" => Ok(MetricKind::WithinMwe),
            other => Err(format!("unknown metric kind `{other}`")),
        }
    }
}

/// Which model variant a curve describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskTag {
    Pretrained,
    Deprel,
    Pos,
    Ner,
    Topic,
}

impl TaskTag {
    pub const ALL: [TaskTag; 5] = [
        TaskTag::Pretrained,
        TaskTag::Deprel,
        TaskTag::Pos,
        TaskTag::Ner,
        TaskTag::Topic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskTag::Pretrained => "pretrained",
            TaskTag::Deprel => "deprel",
            TaskTag::Pos => "pos",
            TaskTag::Ner => "ner",
            TaskTag::Topic => "topic",
        }
    }

    /// Display label used in figures and tables.
    pub fn label(self) -> &'static str {
        match self {
            TaskTag::Pretrained => "Pre-trained",
            TaskTag::Deprel => "DepRel",
            TaskTag::Pos => "POS",
            TaskTag::Ner => "NER",
            TaskTag::Topic => "Topic",
        }
    }
}

impl fmt::Display for TaskTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TaskTag::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| format!("unknown task tag `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialPolicy {
    /// Drop special tokens from queries and keys; no renormalization.
    #[default]
    Exclude,
    /// Drop special tokens and renormalize each row over non-special keys.
    Renormalize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagonalPolicy {
    /// within-MWE ignores a token's attention to itself.
    #[default]
    Exclude,
    Include,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOptions {
    #[serde(default)]
    pub special: SpecialPolicy,
    #[serde(default)]
    pub diagonal: DiagonalPolicy,
}

fn check_indices(set: &[usize], t: usize) -> Result<(), MetricError> {
    match set.iter().find(|&&i| i >= t) {
        Some(&index) => Err(MetricError::IndexOutOfRange { index, seq_len: t }),
        None => Ok(()),
    }
}

fn mask<F: Scalar>(t: usize, set: &[usize]) -> Vec<F> {
    let mut m = vec![F::zero(); t];
    for &i in set {
        m[i] = F::one();
    }
    m
}

#[inline]
fn dot<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + *x * *y)
}

fn mean_percent<F: Scalar>(per_row: impl Iterator<Item = F>, n: usize) -> F {
    let total = per_row.fold(F::zero(), |a, b| a + b);
    F::hundred() * total / F::from_usize_lossy(n)
}

/// `100 · (1/|C|) Σ_{q∈C} Σ_{k∈M} A[q,k]` on one row-major `T×T` layer.
pub fn context_to_mwe<F: Scalar>(
    layer: &[F],
    t: usize,
    mwe: &[usize],
    context: &[usize],
) -> Result<F, MetricError> {
    validate_sets(t, mwe, context)?;
    let m = mask::<F>(t, mwe);
    Ok(mean_percent(
        context.iter().map(|&q| dot(&layer[q * t..(q + 1) * t], &m)),
        context.len(),
    ))
}

/// Like [`context_to_mwe`], but each row's MWE mass is divided by its mass
/// over `keys` (the non-special tokens).
pub fn context_to_mwe_renormalized<F: Scalar>(
    layer: &[F],
    t: usize,
    mwe: &[usize],
    context: &[usize],
    keys: &[usize],
) -> Result<F, MetricError> {
    validate_sets(t, mwe, context)?;
    check_indices(keys, t)?;
    let m = mask::<F>(t, mwe);
    let km = mask::<F>(t, keys);
    Ok(mean_percent(
        context.iter().map(|&q| {
            let row = &layer[q * t..(q + 1) * t];
            safe_ratio(dot(row, &m), dot(row, &km))
        }),
        context.len(),
    ))
}

fn safe_ratio<F: Scalar>(num: F, den: F) -> F {
    if den > F::zero() {
        num / den
    } else {
        F::zero()
    }
}

fn validate_sets(t: usize, mwe: &[usize], context: &[usize]) -> Result<(), MetricError> {
    if mwe.is_empty() {
        return Err(MetricError::EmptyMwe);
    }
    if context.is_empty() {
        return Err(MetricError::ContextEmpty);
    }
    check_indices(mwe, t)?;
    check_indices(context, t)?;
    if let Some(&i) = context.iter().find(|i| mwe.contains(i)) {
        return Err(MetricError::NotDisjoint(i));
    }
    Ok(())
}

/// `100 · (1/|M|) Σ_{q∈M} Σ_{k∈M, k≠q} A[q,k]`.
pub fn within_mwe<F: Scalar>(layer: &[F], t: usize, mwe: &[usize]) -> Result<F, MetricError> {
    within_mwe_with(layer, t, mwe, None, DiagonalPolicy::Exclude)
}

/// General form of [`within_mwe`]: optional renormalization keys and
/// diagonal handling.
pub fn within_mwe_with<F: Scalar>(
    layer: &[F],
    t: usize,
    mwe: &[usize],
    keys: Option<&[usize]>,
    diagonal: DiagonalPolicy,
) -> Result<F, MetricError> {
    if mwe.len() < 2 {
        return Err(MetricError::SingleTokenMwe);
    }
    check_indices(mwe, t)?;
    if let Some(k) = keys {
        check_indices(k, t)?;
    }
    let m = mask::<F>(t, mwe);
    let km = keys.map(|k| mask::<F>(t, k));
    Ok(mean_percent(
        mwe.iter().map(|&q| {
            let row = &layer[q * t..(q + 1) * t];
            let mut mass = dot(row, &m);
            if diagonal == DiagonalPolicy::Exclude {
                mass = mass - row[q];
            }
            match &km {
                Some(km) => safe_ratio(mass, dot(row, km)),
                None => mass,
            }
        }),
        mwe.len(),
    ))
}

/// Per-layer values for one instance, with diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCurve<F> {
    pub instance_id: String,
    pub values: Vec<F>,
    /// Percentage of query mass sent to special tokens, per layer.
    pub special_mass: Vec<F>,
    /// Metric value under attention uniform over non-special tokens.
    pub uniform_baseline: F,
}

/// Applies the chosen metric to every layer of `stack`.
pub fn curve_for_instance<F: Scalar>(
    stack: &AttentionStack<F>,
    tok: &TokenizedSentence,
    alignment: &MweAlignment,
    kind: MetricKind,
    opts: MetricOptions,
) -> Result<InstanceCurve<F>, MetricError> {
    let t = stack.seq_len;
    if tok.len() != t {
        return Err(MetricError::ShapeMismatch(format!(
            "{} tokens vs attention over {t}",
            tok.len()
        )));
    }
    let mwe = &alignment.token_indices;
    let specials = tok.special_indices();
    let keys: Vec<usize> = (0..t).filter(|&i| !tok.special[i]).collect();
    let t_prime = F::from_usize_lossy(keys.len());
    let m = F::from_usize_lossy(mwe.len());

    let (queries, baseline) = match kind {
        MetricKind::ContextToMwe => {
            let ctx = context_indices(tok, alignment).map_err(|_| MetricError::ContextEmpty)?;
            (ctx, F::hundred() * m / t_prime)
        }
        MetricKind::WithinMwe => {
            if mwe.len() < 2 {
                return Err(MetricError::SingleTokenMwe);
            }
            let own = match opts.diagonal {
                DiagonalPolicy::Exclude => m - F::one(),
                DiagonalPolicy::Include => m,
            };
            (mwe.clone(), F::hundred() * own / t_prime)
        }
    };

    let renorm = opts.special == SpecialPolicy::Renormalize;
    let mut values = Vec::with_capacity(stack.layers);
    let mut special_mass = Vec::with_capacity(stack.layers);
    for l in 0..stack.layers {
        let layer = stack.layer(l);
        let v = match kind {
            MetricKind::ContextToMwe if renorm => {
                context_to_mwe_renormalized(layer, t, mwe, &queries, &keys)?
            }
            MetricKind::ContextToMwe => context_to_mwe(layer, t, mwe, &queries)?,
            MetricKind::WithinMwe => {
                within_mwe_with(layer, t, mwe, renorm.then_some(&keys[..]), opts.diagonal)?
            }
        };
        values.push(v);
        let sm = mask::<F>(t, &specials);
        special_mass.push(mean_percent(
            queries.iter().map(|&q| dot(&layer[q * t..(q + 1) * t], &sm)),
            queries.len(),
        ));
    }
    Ok(InstanceCurve {
        instance_id: alignment.instance_id.clone(),
        values,
        special_mass,
        uniform_baseline: baseline,
    })
}

/// Identity of a corpus-level curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub model_id: String,
    pub corpus: String,
    pub task_tag: TaskTag,
    pub mwe_type: MweType,
    pub metric_kind: MetricKind,
}

/// Corpus-level per-layer percentages (layer `l` at `values[l-1]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCurve<F> {
    pub model_id: String,
    pub corpus: String,
    pub task_tag: TaskTag,
    pub mwe_type: MweType,
    pub metric_kind: MetricKind,
    pub values: Vec<F>,
    pub n_instances: usize,
    pub n_skipped: usize,
    pub uniform_baseline: F,
    pub special_mass: Vec<F>,
}

impl<F: Scalar> LayerCurve<F> {
    pub fn layers(&self) -> usize {
        self.values.len()
    }

    pub fn meta(&self) -> CurveMeta {
        CurveMeta {
            model_id: self.model_id.clone(),
            corpus: self.corpus.clone(),
            task_tag: self.task_tag,
            mwe_type: self.mwe_type,
            metric_kind: self.metric_kind,
        }
    }

    /// Stable file stem: `<corpus>__<mwe_type>__<model>__<metric>`.
    pub fn stem(&self) -> String {
        format!(
            "{}__{}__{}__{}",
            self.corpus, self.mwe_type, self.model_id, self.metric_kind
        )
    }
}

fn mean_columns<F: Scalar>(rows: &[&[F]], n: usize) -> Vec<F> {
    let mut acc = vec![F::zero(); n];
    for row in rows {
        for (a, v) in acc.iter_mut().zip(row.iter()) {
            *a = *a + *v;
        }
    }
    let count = F::from_usize_lossy(rows.len());
    acc.into_iter().map(|a| a / count).collect()
}

/// Unweighted per-instance mean of instance curves, in input order.
pub fn aggregate<F: Scalar>(
    curves: &[InstanceCurve<F>],
    n_skipped: usize,
    meta: CurveMeta,
) -> Result<LayerCurve<F>, MetricError> {
    let first = curves.first().ok_or(MetricError::NoCurves)?;
    let layers = first.values.len();
    if let Some(bad) = curves.iter().find(|c| c.values.len() != layers) {
        return Err(MetricError::ShapeMismatch(format!(
            "curve `{}` has {} layers, expected {layers}",
            bad.instance_id,
            bad.values.len()
        )));
    }
    let vals: Vec<&[F]> = curves.iter().map(|c| &c.values[..]).collect();
    let special: Vec<&[F]> = curves.iter().map(|c| &c.special_mass[..]).collect();
    let baselines: Vec<F> = curves.iter().map(|c| c.uniform_baseline).collect();
    let baseline_rows: Vec<&[F]> = baselines.chunks(1).collect();
    Ok(LayerCurve {
        model_id: meta.model_id,
        corpus: meta.corpus,
        task_tag: meta.task_tag,
        mwe_type: meta.mwe_type,
        metric_kind: meta.metric_kind,
        values: mean_columns(&vals, layers),
        n_instances: curves.len(),
        n_skipped,
        uniform_baseline: mean_columns(&baseline_rows, 1)[0],
        special_mass: mean_columns(&special, layers),
    })
}

/// Fine-tuned minus baseline, per layer, in percentage points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult<F> {
    pub baseline: LayerCurve<F>,
    pub tuned: LayerCurve<F>,
    pub deltas: Vec<F>,
}

impl<F: Scalar> ComparisonResult<F> {
    pub fn stem(&self) -> String {
        format!(
            "{}__{}__{}_vs_{}__{}",
            self.tuned.corpus,
            self.tuned.mwe_type,
            self.tuned.model_id,
            self.baseline.model_id,
            self.tuned.metric_kind
        )
    }
}

pub fn compare<F: Scalar>(
    tuned: &LayerCurve<F>,
    baseline: &LayerCurve<F>,
) -> Result<ComparisonResult<F>, MetricError> {
    if tuned.layers() != baseline.layers() {
        return Err(MetricError::ShapeMismatch(format!(
            "{} vs {} layers",
            tuned.layers(),
            baseline.layers()
        )));
    }
    if tuned.metric_kind != baseline.metric_kind {
        return Err(MetricError::ShapeMismatch(format!(
            "metric {} vs {}",
            tuned.metric_kind, baseline.metric_kind
        )));
    }
    if tuned.mwe_type != baseline.mwe_type {
        return Err(MetricError::ShapeMismatch(format!(
            "MWE type {} vs {}",
            tuned.mwe_type, baseline.mwe_type
        )));
    }
    let deltas = tuned
        .values
        .iter()
        .zip(&baseline.values)
        .map(|(t, b)| *t - *b)
        .collect();
    Ok(ComparisonResult {
        baseline: baseline.clone(),
        tuned: tuned.clone(),
        deltas,
    })
}

//! Report emission: CSV/JSON tables, SVG figures, top-k grids and a Markdown
//! summary, written as
//!
//! ```text
//! report/
//!   curves/   <stem>.csv, <stem>.json, <corpus>__<type>__<metric>.svg
//!   deltas/   <stem>.csv, <stem>.json, <stem>.svg
//!   topk/     <stem>.csv, table.md, table.csv
//!   report.md
//!   provenance.json
//! ```
//!
//! Everything except the `timestamp` field of `provenance.json` is a pure
//! function of the bundle and the style.

pub mod csv;
pub mod svg;
pub mod table;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{ComparisonResult, LayerCurve, TaskTag, TopKTable};
pub use svg::{render_curves, render_deltas, Style};
pub use table::{render_topk_grid_csv, render_topk_markdown};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("nothing selected to render")]
    EmptySelection,
    #[error("incompatible inputs: {0}")]
    Incompatible(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("model `{0}` is not listed in provenance")]
    UnknownModel(String),
    #[error("missing provenance field: {0}")]
    MissingProvenance(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelProvenance {
    pub task_tag: TaskTag,
    /// Checkpoint path or toy-runner recipe.
    pub source: String,
    /// Weight digest, when the runner exposes one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    /// Corpus name to SHA-256 of its canonical JSONL serialization.
    pub corpus_hashes: BTreeMap<String, String>,
    pub models: BTreeMap<String, ModelProvenance>,
    pub config_hash: String,
    pub timestamp: String,
    pub generator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub curves: Vec<LayerCurve<f64>>,
    pub comparisons: Vec<ComparisonResult<f64>>,
    pub topk: Vec<TopKTable<f64>>,
    pub provenance: Provenance,
}

impl ReportBundle {
    /// Every referenced model and corpus must be listed in provenance with
    /// a hash.
    pub fn validate(&self) -> Result<(), ReportError> {
        let p = &self.provenance;
        if p.config_hash.is_empty() {
            return Err(ReportError::MissingProvenance("config_hash".into()));
        }
        let models = self
            .curves
            .iter()
            .map(|c| (&c.model_id, &c.corpus))
            .chain(self.comparisons.iter().flat_map(|c| {
                [
                    (&c.baseline.model_id, &c.baseline.corpus),
                    (&c.tuned.model_id, &c.tuned.corpus),
                ]
            }))
            .chain(self.topk.iter().map(|t| (&t.model_id, &t.corpus)));
        for (model, corpus) in models {
            if !p.models.contains_key(model) {
                return Err(ReportError::UnknownModel(model.clone()));
            }
            if p.corpus_hashes.get(corpus).is_none_or(|h| h.is_empty()) {
                return Err(ReportError::MissingProvenance(format!("corpus hash for `{corpus}`")));
            }
        }
        Ok(())
    }
}

struct Writer {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl Writer {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<(), ReportError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|source| ReportError::Io {
                path: dir.to_path_buf(),
                source,
            })?;
        }
        std::fs::write(&path, bytes).map_err(|source| ReportError::Io {
            path: path.clone(),
            source,
        })?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, rel: &str, v: &T) -> Result<(), ReportError> {
        let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
        s.push('\n');
        self.put(rel, s.as_bytes())
    }
}

/// Curves grouped into one figure per (corpus, MWE type, metric), in a
/// stable order.
fn figure_groups(curves: &[LayerCurve<f64>]) -> BTreeMap<String, Vec<&LayerCurve<f64>>> {
    let mut groups: BTreeMap<String, Vec<&LayerCurve<f64>>> = BTreeMap::new();
    for c in curves {
        groups
            .entry(format!("{}__{}__{}", c.corpus, c.mwe_type, c.metric_kind))
            .or_default()
            .push(c);
    }
    for g in groups.values_mut() {
        g.sort_by(|a, b| (a.task_tag, &a.model_id).cmp(&(b.task_tag, &b.model_id)));
    }
    groups
}

fn fmt2(v: f64) -> String {
    format!("{v:.2}")
}

fn summary(bundle: &ReportBundle, groups: &BTreeMap<String, Vec<&LayerCurve<f64>>>) -> Result<String, ReportError> {
    let mut md = String::from("# Layer-wise attention to multiword expressions\n\n");
    md.push_str(
        "Scope: this repository verifies the format and the determinism of these artifacts. \
It does not verify any published attention values; numbers below depend entirely on the \
checkpoints and corpora named in `provenance.json`.\n\n",
    );
    md.push_str("Values are percentages of attention mass (0 to 100), averaged over instances; \
deltas are percentage points (tuned minus baseline).\n\n");

    md.push_str("## Models\n\n| Model | Task | Source |\n|---|---|---|\n");
    for (id, m) in &bundle.provenance.models {
        let _ = writeln!(md, "| {id} | {} | {} |", m.task_tag.label(), m.source);
    }
    md.push('\n');

    md.push_str("## Layer curves\n\n");
    for (stem, curves) in groups {
        let _ = writeln!(md, "### {stem}\n\n![{stem}](curves/{stem}.svg)\n");
        let mut header = String::from("| Layer |");
        let mut rule = String::from("|---|");
        for c in curves {
            let _ = write!(header, " {} ({}) |", c.task_tag.label(), c.model_id);
            rule.push_str("---|");
        }
        let _ = writeln!(md, "{header}\n{rule}");
        for l in 0..curves[0].layers() {
            let _ = write!(md, "| {} |", l + 1);
            for c in curves {
                let _ = write!(md, " {} |", fmt2(c.values[l]));
            }
            md.push('\n');
        }
        let _ = write!(md, "| n / skipped |");
        for c in curves {
            let _ = write!(md, " {} / {} |", c.n_instances, c.n_skipped);
        }
        let _ = write!(md, "\n| uniform baseline |");
        for c in curves {
            let _ = write!(md, " {} |", fmt2(c.uniform_baseline));
        }
        md.push_str("\n\n");
    }

    if !bundle.comparisons.is_empty() {
        md.push_str("## Fine-tuning deltas\n\n");
        for c in &bundle.comparisons {
            let stem = c.stem();
            let _ = writeln!(md, "### {stem}\n\n![{stem}](deltas/{stem}.svg)\n");
            let deltas: Vec<String> = c.deltas.iter().map(|d| fmt2(*d)).collect();
            let _ = writeln!(md, "Deltas by layer: {}\n", deltas.join(", "));
        }
    }

    if !bundle.topk.is_empty() {
        md.push_str("## Top layers\n\n");
        md.push_str(&render_topk_markdown(&bundle.topk)?);
        md.push('\n');
    }
    Ok(md)
}

/// Writes the full report tree under `dir` and returns the written paths.
pub fn write_report(bundle: &ReportBundle, dir: &Path, style: &Style) -> Result<Vec<PathBuf>, ReportError> {
    bundle.validate()?;
    if bundle.curves.is_empty() {
        return Err(ReportError::EmptySelection);
    }
    let mut w = Writer {
        root: dir.to_path_buf(),
        written: Vec::new(),
    };
    for c in &bundle.curves {
        let stem = c.stem();
        w.put(&format!("curves/{stem}.csv"), csv::curve_to_csv(c).as_bytes())?;
        w.json(&format!("curves/{stem}.json"), c)?;
    }
    let groups = figure_groups(&bundle.curves);
    for (stem, curves) in &groups {
        w.put(&format!("curves/{stem}.svg"), render_curves(curves, style)?.as_bytes())?;
    }
    for c in &bundle.comparisons {
        let stem = c.stem();
        w.put(&format!("deltas/{stem}.csv"), csv::comparison_to_csv(c).as_bytes())?;
        w.json(&format!("deltas/{stem}.json"), c)?;
        w.put(&format!("deltas/{stem}.svg"), render_deltas(c, style)?.as_bytes())?;
    }
    if !bundle.topk.is_empty() {
        for t in &bundle.topk {
            let stem = format!("{}__{}__{}__{}", t.corpus, t.mwe_type, t.model_id, t.metric_kind);
            w.put(&format!("topk/{stem}.csv"), csv::topk_to_csv(t).as_bytes())?;
        }
        w.put("topk/table.md", render_topk_markdown(&bundle.topk)?.as_bytes())?;
        w.put("topk/table.csv", render_topk_grid_csv(&bundle.topk)?.as_bytes())?;
    }
    w.put("report.md", summary(bundle, &groups)?.as_bytes())?;
    w.json("provenance.json", &bundle.provenance)?;
    Ok(w.written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::MweType;
    use crate::metrics::{compare, top_k, MetricKind};

    fn curve(model: &str, tag: TaskTag, values: Vec<f64>) -> LayerCurve<f64> {
        LayerCurve {
            model_id: model.into(),
            corpus: "fixture".into(),
            task_tag: tag,
            mwe_type: MweType::Idiom,
            metric_kind: MetricKind::ContextToMwe,
            special_mass: vec![0.0; values.len()],
            values,
            n_instances: 3,
            n_skipped: 1,
            uniform_baseline: 10.0,
        }
    }

    fn bundle() -> ReportBundle {
        let a = curve("base", TaskTag::Pretrained, vec![10.0, 12.0, 9.0]);
        let b = curve("tuned", TaskTag::Pos, vec![11.0, 10.0, 9.5]);
        let models = [("base", TaskTag::Pretrained), ("tuned", TaskTag::Pos)]
            .into_iter()
            .map(|(id, t)| {
                (
                    id.to_string(),
                    ModelProvenance {
                        task_tag: t,
                        source: "toy".into(),
                        digest: None,
                    },
                )
            })
            .collect();
        ReportBundle {
            comparisons: vec![compare(&b, &a).unwrap()],
            topk: vec![top_k(&a, 3).unwrap(), top_k(&b, 3).unwrap()],
            curves: vec![a, b],
            provenance: Provenance {
                corpus_hashes: [("fixture".to_string(), "ab".repeat(32))].into(),
                models,
                config_hash: "cd".repeat(32),
                timestamp: "2026-01-01T00:00:00Z".into(),
                generator: "test".into(),
            },
        }
    }

    #[test]
    fn writes_the_tree_deterministically() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let b = bundle();
        let w1 = write_report(&b, d1.path(), &Style::default()).unwrap();
        let w2 = write_report(&b, d2.path(), &Style::default()).unwrap();
        assert_eq!(w1.len(), w2.len());
        for (p1, p2) in w1.iter().zip(&w2) {
            assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap(), "{}", p1.display());
        }
        for rel in [
            "curves/fixture__idiom__context_to_mwe.svg",
            "curves/fixture__idiom__base__context_to_mwe.csv",
            "deltas/fixture__idiom__tuned_vs_base__context_to_mwe.svg",
            "topk/table.md",
            "report.md",
            "provenance.json",
        ] {
            assert!(d1.path().join(rel).exists(), "{rel}");
        }
        let md = std::fs::read_to_string(d1.path().join("report.md")).unwrap();
        assert!(md.contains("does not verify any published attention values"));
    }

    #[test]
    fn unknown_models_are_rejected() {
        let mut b = bundle();
        b.provenance.models.remove("tuned");
        assert!(matches!(b.validate(), Err(ReportError::UnknownModel(m)) if m == "tuned"));
        let mut b = bundle();
        b.provenance.corpus_hashes.clear();
        assert!(matches!(b.validate(), Err(ReportError::MissingProvenance(_))));
    }
}

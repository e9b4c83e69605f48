//! CSV emitters and parsers. Metadata rides along as leading `# key: value`
//! comment lines so a file is self-describing and parses back to an equal
//! structure. Floats use the shortest round-trip representation.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use super::ReportError;
use crate::metrics::{ComparisonResult, LayerCurve, TopKEntry, TopKTable};

pub const CURVE_HEADER: &str = "layer,value,n,skipped,special_mass";
pub const COMPARISON_HEADER: &str = "layer,baseline,tuned,delta";
pub const TOPK_HEADER: &str = "rank,layer,zone,value";

fn meta_line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "# {key}: {value}");
}

pub fn curve_to_csv(c: &LayerCurve<f64>) -> String {
    let mut out = String::new();
    meta_line(&mut out, "model_id", &c.model_id);
    meta_line(&mut out, "corpus", &c.corpus);
    meta_line(&mut out, "task_tag", c.task_tag);
    meta_line(&mut out, "mwe_type", c.mwe_type);
    meta_line(&mut out, "metric_kind", c.metric_kind);
    meta_line(&mut out, "uniform_baseline", c.uniform_baseline);
    out.push_str(CURVE_HEADER);
    out.push('\n');
    for (i, (v, s)) in c.values.iter().zip(&c.special_mass).enumerate() {
        let _ = writeln!(out, "{},{v},{},{},{s}", i + 1, c.n_instances, c.n_skipped);
    }
    out
}

pub fn comparison_to_csv(c: &ComparisonResult<f64>) -> String {
    let mut out = String::new();
    meta_line(&mut out, "baseline_model_id", &c.baseline.model_id);
    meta_line(&mut out, "tuned_model_id", &c.tuned.model_id);
    meta_line(&mut out, "tuned_task_tag", c.tuned.task_tag);
    meta_line(&mut out, "corpus", &c.tuned.corpus);
    meta_line(&mut out, "mwe_type", c.tuned.mwe_type);
    meta_line(&mut out, "metric_kind", c.tuned.metric_kind);
    meta_line(&mut out, "unit", "percentage points");
    out.push_str(COMPARISON_HEADER);
    out.push('\n');
    for (i, d) in c.deltas.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{d}", i + 1, c.baseline.values[i], c.tuned.values[i]);
    }
    out
}

pub fn topk_to_csv(t: &TopKTable<f64>) -> String {
    let mut out = String::new();
    meta_line(&mut out, "model_id", &t.model_id);
    meta_line(&mut out, "corpus", &t.corpus);
    meta_line(&mut out, "task_tag", t.task_tag);
    meta_line(&mut out, "mwe_type", t.mwe_type);
    meta_line(&mut out, "metric_kind", t.metric_kind);
    meta_line(&mut out, "layers", t.layers);
    meta_line(&mut out, "k", t.k);
    out.push_str(TOPK_HEADER);
    out.push('\n');
    for e in &t.entries {
        let _ = writeln!(out, "{},{},{},{}", e.rank, e.layer, e.zone, e.value);
    }
    out
}

struct Parsed<'a> {
    meta: BTreeMap<&'a str, &'a str>,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn split<'a>(text: &'a str, header: &str) -> Result<Parsed<'a>, ReportError> {
    let mut meta = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        if let Some(m) = line.strip_prefix("# ") {
            if let Some((k, v)) = m.split_once(": ") {
                meta.insert(k, v);
            }
        } else if !seen_header {
            if line != header {
                return Err(ReportError::Parse {
                    line: i + 1,
                    message: format!("expected header `{header}`"),
                });
            }
            seen_header = true;
        } else {
            rows.push((i + 1, line.split(',').collect()));
        }
    }
    if !seen_header {
        return Err(ReportError::Parse {
            line: 0,
            message: format!("missing header `{header}`"),
        });
    }
    Ok(Parsed { meta, rows })
}

impl Parsed<'_> {
    fn get<T: FromStr>(&self, key: &str) -> Result<T, ReportError> {
        let raw = self.meta.get(key).ok_or_else(|| ReportError::Parse {
            line: 0,
            message: format!("missing `# {key}:` line"),
        })?;
        raw.parse().map_err(|_| ReportError::Parse {
            line: 0,
            message: format!("bad value for {key}: {raw:?}"),
        })
    }
}

fn field<T: FromStr>(row: &(usize, Vec<&str>), i: usize) -> Result<T, ReportError> {
    let raw = row.1.get(i).ok_or_else(|| ReportError::Parse {
        line: row.0,
        message: format!("missing column {}", i + 1),
    })?;
    raw.parse().map_err(|_| ReportError::Parse {
        line: row.0,
        message: format!("cannot parse {raw:?}"),
    })
}

pub fn curve_from_csv(text: &str) -> Result<LayerCurve<f64>, ReportError> {
    let p = split(text, CURVE_HEADER)?;
    let mut values = Vec::new();
    let mut special_mass = Vec::new();
    let (mut n, mut skipped) = (0, 0);
    for (i, row) in p.rows.iter().enumerate() {
        let layer: usize = field(row, 0)?;
        if layer != i + 1 {
            return Err(ReportError::Parse {
                line: row.0,
                message: format!("expected layer {}, found {layer}", i + 1),
            });
        }
        values.push(field(row, 1)?);
        n = field(row, 2)?;
        skipped = field(row, 3)?;
        special_mass.push(field(row, 4)?);
    }
    Ok(LayerCurve {
        model_id: p.get("model_id")?,
        corpus: p.get("corpus")?,
        task_tag: p.get("task_tag")?,
        mwe_type: p.get("mwe_type")?,
        metric_kind: p.get("metric_kind")?,
        values,
        n_instances: n,
        n_skipped: skipped,
        uniform_baseline: p.get("uniform_baseline")?,
        special_mass,
    })
}

pub fn topk_from_csv(text: &str) -> Result<TopKTable<f64>, ReportError> {
    let p = split(text, TOPK_HEADER)?;
    let entries = p
        .rows
        .iter()
        .map(|row| {
            Ok(TopKEntry {
                rank: field(row, 0)?,
                layer: field(row, 1)?,
                zone: field(row, 2)?,
                value: field(row, 3)?,
            })
        })
        .collect::<Result<Vec<_>, ReportError>>()?;
    Ok(TopKTable {
        model_id: p.get("model_id")?,
        corpus: p.get("corpus")?,
        task_tag: p.get("task_tag")?,
        mwe_type: p.get("mwe_type")?,
        metric_kind: p.get("metric_kind")?,
        layers: p.get("layers")?,
        k: p.get("k")?,
        entries,
    })
}

/// Deltas column of a comparison CSV.
pub fn deltas_from_csv(text: &str) -> Result<Vec<f64>, ReportError> {
    let p = split(text, COMPARISON_HEADER)?;
    p.rows.iter().map(|r| field(r, 3)).collect()
}

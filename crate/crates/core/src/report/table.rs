//! Top-k layer tables in a grid layout: one block per (MWE type, metric),
//! one row per model, one `T1..Tk` column group per corpus. Zones are shown
//! as text tags; middle-zone layers are additionally bold in Markdown.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::ReportError;
use crate::corpus::MweType;
use crate::metrics::{MetricKind, TaskTag, TopKTable, Zone};

fn tag(z: Zone) -> &'static str {
    match z {
        Zone::Lower => "L",
        Zone::Middle => "M",
        Zone::Upper => "U",
    }
}

type BlockKey = (MweType, MetricKind);
type RowKey = (TaskTag, String);

struct Grid<'a> {
    k: usize,
    corpora: Vec<String>,
    blocks: BTreeMap<BlockKey, BTreeMap<RowKey, BTreeMap<String, &'a TopKTable<f64>>>>,
}

fn grid(tables: &[TopKTable<f64>]) -> Result<Grid<'_>, ReportError> {
    let first = tables.first().ok_or(ReportError::EmptySelection)?;
    if let Some(t) = tables.iter().find(|t| t.k != first.k) {
        return Err(ReportError::Incompatible(format!(
            "k = {} for {} but {} for {}",
            t.k, t.model_id, first.k, first.model_id
        )));
    }
    let corpora: BTreeSet<String> = tables.iter().map(|t| t.corpus.clone()).collect();
    let mut blocks: BTreeMap<_, BTreeMap<_, BTreeMap<_, _>>> = BTreeMap::new();
    for t in tables {
        let row = blocks
            .entry((t.mwe_type, t.metric_kind))
            .or_default()
            .entry((t.task_tag, t.model_id.clone()))
            .or_default();
        if row.insert(t.corpus.clone(), t).is_some() {
            return Err(ReportError::Incompatible(format!(
                "duplicate table for {} on {}",
                t.model_id, t.corpus
            )));
        }
    }
    Ok(Grid {
        k: first.k,
        corpora: corpora.into_iter().collect(),
        blocks,
    })
}

fn row_label(key: &RowKey, rows: &BTreeMap<RowKey, impl Sized>) -> String {
    let shared = rows.keys().filter(|(t, _)| *t == key.0).count() > 1;
    if shared {
        format!("{} ({})", key.0.label(), key.1)
    } else {
        key.0.label().to_string()
    }
}

/// Markdown rendering. Cells read `layer (Z)` with `Z` in {L, M, U}; missing
/// combinations show `--`.
pub fn render_topk_markdown(tables: &[TopKTable<f64>]) -> Result<String, ReportError> {
    let g = grid(tables)?;
    let mut out = String::new();
    for ((mwe, metric), rows) in &g.blocks {
        let _ = writeln!(out, "### {mwe} / {metric}\n");
        let mut header = String::from("| Task |");
        let mut rule = String::from("|---|");
        for c in &g.corpora {
            for r in 1..=g.k {
                let _ = write!(header, " {c} T{r} |");
                rule.push_str("---|");
            }
        }
        let _ = writeln!(out, "{header}\n{rule}");
        for (key, cells) in rows {
            let _ = write!(out, "| {} |", row_label(key, rows));
            for c in &g.corpora {
                for r in 0..g.k {
                    let cell = cells.get(c).and_then(|t| t.entries.get(r)).map(|e| {
                        if e.zone == Zone::Middle {
                            format!("**{}** ({})", e.layer, tag(e.zone))
                        } else {
                            format!("{} ({})", e.layer, tag(e.zone))
                        }
                    });
                    let _ = write!(out, " {} |", cell.as_deref().unwrap_or("--"));
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out.push_str("Zones: L = lower third, M = middle third (bold), U = upper third of the layer stack.\n");
    Ok(out)
}

/// Wide CSV with the same layout; cells are `layer:zone`.
pub fn render_topk_grid_csv(tables: &[TopKTable<f64>]) -> Result<String, ReportError> {
    let g = grid(tables)?;
    let mut out = String::from("mwe_type,metric_kind,task_tag,model_id");
    for c in &g.corpora {
        for r in 1..=g.k {
            let _ = write!(out, ",{c}:T{r}");
        }
    }
    out.push('\n');
    for ((mwe, metric), rows) in &g.blocks {
        for ((task, model), cells) in rows {
            let _ = write!(out, "{mwe},{metric},{task},{model}");
            for c in &g.corpora {
                for r in 0..g.k {
                    match cells.get(c).and_then(|t| t.entries.get(r)) {
                        Some(e) => {
                            let _ = write!(out, ",{}:{}", e.layer, e.zone);
                        }
                        None => out.push(','),
                    }
                }
            }
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{top_k, LayerCurve};

    fn table(corpus: &str, tag: TaskTag, values: Vec<f64>) -> TopKTable<f64> {
        let c = LayerCurve {
            model_id: format!("m-{tag}"),
            corpus: corpus.into(),
            task_tag: tag,
            mwe_type: MweType::Idiom,
            metric_kind: MetricKind::ContextToMwe,
            special_mass: vec![0.0; values.len()],
            values,
            n_instances: 1,
            n_skipped: 0,
            uniform_baseline: 0.0,
        };
        top_k(&c, 3).unwrap()
    }

    #[test]
    fn three_rank_columns() {
        let mut v = vec![0.0; 24];
        v[11] = 9.0;
        v[0] = 8.0;
        v[3] = 7.0;
        let md = render_topk_markdown(&[table("en", TaskTag::Pretrained, v)]).unwrap();
        assert!(md.contains("| Task | en T1 | en T2 | en T3 |"));
        assert!(md.contains("| Pre-trained | **12** (M) | 1 (L) | 4 (L) |"));
    }

    #[test]
    fn missing_cells_and_grid_csv() {
        let a = table("en", TaskTag::Pos, vec![1.0, 2.0, 3.0]);
        let b = table("pl", TaskTag::Pretrained, vec![3.0, 2.0, 1.0]);
        let md = render_topk_markdown(&[a.clone(), b.clone()]).unwrap();
        assert!(md.contains("| POS | 3 (U) | **2** (M) | 1 (L) | -- | -- | -- |"));
        let csv = render_topk_grid_csv(&[a, b]).unwrap();
        assert!(csv.starts_with("mwe_type,metric_kind,task_tag,model_id,en:T1,en:T2,en:T3,pl:T1,pl:T2,pl:T3\n"));
        assert!(csv.contains("idiom,context_to_mwe,pretrained,m-pretrained,,,,1:lower,2:middle,3:upper\n"));
        assert!(matches!(render_topk_markdown(&[]), Err(ReportError::EmptySelection)));
    }
}

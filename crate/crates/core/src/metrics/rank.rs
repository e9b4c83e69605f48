use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LayerCurve, MetricError, MetricKind, TaskTag};
use crate::corpus::MweType;
use crate::Scalar;

/// Lower / middle / upper third of the encoder stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Lower,
    Middle,
    Upper,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::Lower => "lower",
            Zone::Middle => "middle",
            Zone::Upper => "upper",
        }
    }
}

impl fmt::Display for Zone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Zone {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lower" => Ok(Zone::Lower),
            "middle" => Ok(Zone::Middle),
            "upper" => Ok(Zone::Upper),
            other => Err(format!("unknown zone `{other}`")),
        }
    }
}

/// Zone of a 1-based `layer` in an `layers`-deep stack: lower up to
/// `ceil(L/3)`, middle up to `ceil(2L/3)`, upper above. For `L = 24` this is
/// 1–8 / 9–16 / 17–24.
pub fn zone(layer: usize, layers: usize) -> Zone {
    debug_assert!(layer >= 1 && layer <= layers, "layer {layer} not in 1..={layers}");
    let lower_end = layers.div_ceil(3);
    let middle_end = (2 * layers).div_ceil(3);
    if layer <= lower_end {
        Zone::Lower
    } else if layer <= middle_end {
        Zone::Middle
    } else {
        Zone::Upper
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKEntry<F> {
    /// `T1`, `T2`, ...
    pub rank: String,
    /// 1-based layer index.
    pub layer: usize,
    pub zone: Zone,
    pub value: F,
}

/// Highest-attention layers of one curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKTable<F> {
    pub model_id: String,
    pub corpus: String,
    pub task_tag: TaskTag,
    pub mwe_type: MweType,
    pub metric_kind: MetricKind,
    pub layers: usize,
    pub k: usize,
    pub entries: Vec<TopKEntry<F>>,
}

/// Layers sorted by value, descending; ties go to the lower layer.
pub fn top_k<F: Scalar>(curve: &LayerCurve<F>, k: usize) -> Result<TopKTable<F>, MetricError> {
    if k < 1 {
        return Err(MetricError::InvalidK);
    }
    let layers = curve.values.len();
    if k > layers {
        return Err(MetricError::KTooLarge { k, layers });
    }
    let mut order: Vec<usize> = (0..layers).collect();
    order.sort_by(|&a, &b| {
        curve.values[b]
            .partial_cmp(&curve.values[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let entries = order
        .into_iter()
        .take(k)
        .enumerate()
        .map(|(r, l)| TopKEntry {
            rank: format!("T{}", r + 1),
            layer: l + 1,
            zone: zone(l + 1, layers),
            value: curve.values[l],
        })
        .collect();
    Ok(TopKTable {
        model_id: curve.model_id.clone(),
        corpus: curve.corpus.clone(),
        task_tag: curve.task_tag,
        mwe_type: curve.mwe_type,
        metric_kind: curve.metric_kind,
        layers,
        k,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(values: Vec<f64>) -> LayerCurve<f64> {
        LayerCurve {
            model_id: "m".into(),
            corpus: "c".into(),
            task_tag: TaskTag::Pretrained,
            mwe_type: MweType::Idiom,
            metric_kind: MetricKind::ContextToMwe,
            special_mass: vec![0.0; values.len()],
            values,
            n_instances: 1,
            n_skipped: 0,
            uniform_baseline: 0.0,
        }
    }

    #[test]
    fn increasing_curve() {
        let t = top_k(&curve((1..=24).map(f64::from).collect()), 3).unwrap();
        let layers: Vec<_> = t.entries.iter().map(|e| e.layer).collect();
        assert_eq!(layers, [24, 23, 22]);
        assert_eq!(t.entries[0].rank, "T1");
        assert!(t.entries.iter().all(|e| e.zone == Zone::Upper));
    }

    #[test]
    fn ties_prefer_lower_layer() {
        let t = top_k(&curve(vec![1.0, 9.0, 3.0, 4.0, 9.0, 2.0]), 3).unwrap();
        let layers: Vec<_> = t.entries.iter().map(|e| e.layer).collect();
        assert_eq!(layers, [2, 5, 4]);
    }

    #[test]
    fn k_bounds() {
        assert_eq!(top_k(&curve(vec![1.0, 2.0]), 0), Err(MetricError::InvalidK));
        assert!(matches!(
            top_k(&curve(vec![1.0, 2.0]), 3),
            Err(MetricError::KTooLarge { .. })
        ));
    }

    #[test]
    fn twenty_four_layer_boundaries() {
        assert_eq!(zone(8, 24), Zone::Lower);
        assert_eq!(zone(9, 24), Zone::Middle);
        assert_eq!(zone(16, 24), Zone::Middle);
        assert_eq!(zone(17, 24), Zone::Upper);
        assert_eq!(zone(24, 24), Zone::Upper);
    }

    #[test]
    fn proportional_thirds() {
        let six: Vec<_> = (1..=6).map(|l| zone(l, 6)).collect();
        assert_eq!(
            six,
            [Zone::Lower, Zone::Lower, Zone::Middle, Zone::Middle, Zone::Upper, Zone::Upper]
        );
        assert_eq!([zone(1, 2), zone(2, 2)], [Zone::Lower, Zone::Middle]);
    }
}

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::FinetuneError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Average {
    /// Pooled counts over all scored positions.
    Micro,
    /// Unweighted mean of per-class F1 over classes seen in gold or
    /// predictions.
    Macro,
}

impl std::str::FromStr for Average {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "micro" => Ok(Average::Micro),
            "macro" => Ok(Average::Macro),
            other => Err(format!("unknown F1 average {other:?} (expected micro or macro)")),
        }
    }
}

fn f1_from(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// F1 of `pred` against `gold`. Classes in `ignore` are never counted as
/// positives (a gold-ignored position mispredicted as a scored class is a
/// false positive). With an empty `ignore` list micro F1 equals accuracy.
pub fn f1_score(gold: &[usize], pred: &[usize], average: Average, ignore: &[usize]) -> Result<f64, FinetuneError> {
    if gold.len() != pred.len() {
        return Err(FinetuneError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(FinetuneError::EmptySplit("test"));
    }
    let scored = |c: &usize| !ignore.contains(c);
    match average {
        Average::Micro => {
            let (mut tp, mut fp, mut fn_) = (0, 0, 0);
            for (g, p) in gold.iter().zip(pred) {
                if g == p {
                    tp += usize::from(scored(g));
                } else {
                    fp += usize::from(scored(p));
                    fn_ += usize::from(scored(g));
                }
            }
            Ok(f1_from(tp, fp, fn_))
        }
        Average::Macro => {
            let classes: BTreeSet<usize> = gold.iter().chain(pred).copied().filter(scored).collect();
            if classes.is_empty() {
                return Ok(0.0);
            }
            let sum: f64 = classes
                .iter()
                .map(|&c| {
                    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
                    for (&g, &p) in gold.iter().zip(pred) {
                        match (g == c, p == c) {
                            (true, true) => tp += 1,
                            (false, true) => fp += 1,
                            (true, false) => fn_ += 1,
                            _ => {}
                        }
                    }
                    f1_from(tp, fp, fn_)
                })
                .sum();
            Ok(sum / classes.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let g = [0, 1, 2, 1, 0];
        assert_eq!(f1_score(&g, &g, Average::Micro, &[]).unwrap(), 1.0);
        assert_eq!(f1_score(&g, &g, Average::Macro, &[]).unwrap(), 1.0);
    }

    #[test]
    fn single_class_on_balanced_pair() {
        // Class 0: tp=3 fp=3 fn=0 -> 2/3. Class 1: tp=0 -> 0.
        let g = [0, 0, 0, 1, 1, 1];
        let p = [0; 6];
        let macro_f1 = f1_score(&g, &p, Average::Macro, &[]).unwrap();
        assert!((macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert!((f1_score(&g, &p, Average::Micro, &[]).unwrap() - 0.5).abs() < 1e-12);
        let wrong = [2; 6];
        assert_eq!(f1_score(&g, &wrong, Average::Macro, &[]).unwrap(), 0.0);
    }

    #[test]
    fn ignored_class_is_not_a_positive() {
        // O=0 ignored. tp=1 (B-PER), fp=1 (O->LOC), fn=1 (PER->O).
        let g = [0, 1, 0, 1];
        let p = [0, 1, 2, 0];
        let f = f1_score(&g, &p, Average::Micro, &[0]).unwrap();
        assert!((f - 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(f1_score(&[], &[], Average::Micro, &[]), Err(FinetuneError::EmptySplit(_))));
        assert!(matches!(
            f1_score(&[0], &[0, 1], Average::Micro, &[]),
            Err(FinetuneError::LengthMismatch { .. })
        ));
    }
}

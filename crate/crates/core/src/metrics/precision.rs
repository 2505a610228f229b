use serde::{Deserialize, Serialize};

use super::{sample_hit, GroundTruth, MatchThresholds};
use crate::error::{invalid, Result};
use crate::pipeline::JointPredictionSet;

/// One point of the precision-recall curve, emitted after every ranked sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Precision-recall curve of all joint samples of a corpus ranked by confidence.
///
/// A sample is a true positive when it hits and no better-ranked sample of the same
/// scenario was already a true positive. Recall is relative to the scenario count.
pub fn precision_recall(corpus: &[(JointPredictionSet, GroundTruth)], th: &MatchThresholds) -> Result<Vec<PrPoint>> {
    if corpus.is_empty() {
        return invalid("precision-recall needs at least one scenario");
    }
    let mut ranked = Vec::new();
    for (si, (pred, gt)) in corpus.iter().enumerate() {
        for (k, s) in pred.samples.iter().enumerate() {
            ranked.push((s.probability, si, k, sample_hit(s, gt, th)?));
        }
    }
    // stable order for equal confidences: corpus order, then sample order
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut found = vec![false; corpus.len()];
    let (mut tp, mut seen) = (0usize, 0usize);
    let n = corpus.len() as f64;
    Ok(ranked
        .into_iter()
        .map(|(_, si, _, hit)| {
            seen += 1;
            if hit && !found[si] {
                found[si] = true;
                tp += 1;
            }
            PrPoint {
                recall: tp as f64 / n,
                precision: tp as f64 / seen as f64,
            }
        })
        .collect())
}

/// Area under the interpolated curve: every recall increment is weighted by the best
/// precision at that recall or beyond.
pub fn average_precision(points: &[PrPoint]) -> f64 {
    let mut interp = vec![0.0; points.len()];
    let mut best = 0.0_f64;
    for (i, p) in points.iter().enumerate().rev() {
        best = best.max(p.precision);
        interp[i] = best;
    }
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    for (p, &ip) in points.iter().zip(&interp) {
        if p.recall > prev_recall {
            ap += (p.recall - prev_recall) * ip;
            prev_recall = p.recall;
        }
    }
    ap
}

pub fn mean_average_precision(corpus: &[(JointPredictionSet, GroundTruth)], th: &MatchThresholds) -> Result<f64> {
    Ok(average_precision(&precision_recall(corpus, th)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed_curve() {
        // ranked hits: T F T F -> precisions 1, 1/2, 2/3, 1/2 over 2 scenarios
        let pts = [
            PrPoint { recall: 0.5, precision: 1.0 },
            PrPoint { recall: 0.5, precision: 0.5 },
            PrPoint { recall: 1.0, precision: 2.0 / 3.0 },
            PrPoint { recall: 1.0, precision: 0.5 },
        ];
        assert!((average_precision(&pts) - (0.5 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn empty_curve_is_zero() {
        assert_eq!(average_precision(&[]), 0.0);
    }
}

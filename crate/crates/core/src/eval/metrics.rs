use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::classify::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Counts with `travel` as the positive class.
pub fn confusion(preds: &[Label], golds: &[Label]) -> Result<Confusion, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            left: preds.len(),
            right: golds.len(),
        });
    }
    let mut c = Confusion::default();
    for (p, g) in preds.iter().zip(golds) {
        match (p.is_positive(), g.is_positive()) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, false) => c.tn += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    Ok(c)
}

/// Precision, recall and F1. A ratio with a zero denominator is reported
/// as 0 with its flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf1 {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn prf1(c: Confusion) -> Prf1 {
    let ratio = |num: u64, den: u64| if den == 0 { (0.0, true) } else { (num as f64 / den as f64, false) };
    let (precision, precision_undefined) = ratio(c.tp, c.tp + c.fp);
    let (recall, recall_undefined) = ratio(c.tp, c.tp + c.fn_);
    let f1_undefined = precision + recall == 0.0;
    Prf1 {
        precision,
        recall,
        f1: f1_score(precision, recall),
        precision_undefined,
        recall_undefined,
        f1_undefined,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Cumulative (negatives, positives) counts at each distinct score,
/// swept from the highest score down, starting at (0, 0).
fn sweep(scores: &[f64], golds: &[Label]) -> Result<(Vec<(u64, u64)>, u64, u64), EvalError> {
    if scores.len() != golds.len() {
        return Err(EvalError::LengthMismatch {
            left: scores.len(),
            right: golds.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(EvalError::InvalidScore(i));
    }
    let p = golds.iter().filter(|g| g.is_positive()).count() as u64;
    let n = golds.len() as u64 - p;
    if p == 0 || n == 0 {
        return Err(EvalError::DegenerateLabels);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut steps = vec![(0u64, 0u64)];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if golds[order[i]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push((fp, tp));
    }
    Ok((steps, n, p))
}

/// ROC points over the distinct score thresholds, from (0,0) to (1,1).
/// Tied scores form a single step.
pub fn roc_curve(scores: &[f64], golds: &[Label]) -> Result<Vec<RocPoint>, EvalError> {
    let (steps, n, p) = sweep(scores, golds)?;
    Ok(steps
        .into_iter()
        .map(|(fp, tp)| RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
        })
        .collect())
}

/// Trapezoidal area under the ROC curve. The trapezoid sum is kept in
/// integers, so the only rounding is the final division.
pub fn auc(scores: &[f64], golds: &[Label]) -> Result<f64, EvalError> {
    let (steps, n, p) = sweep(scores, golds)?;
    let twice_area: u128 = steps
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) as u128 * (w[0].1 + w[1].1) as u128)
        .sum();
    Ok(twice_area as f64 / (2 * p as u128 * n as u128) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{NonTravel as N, Travel as T};

    #[test]
    fn confusion_examples() {
        let c = confusion(&[T, N], &[T, N]).unwrap();
        assert_eq!(c, Confusion { tp: 1, fp: 0, tn: 1, fn_: 0 });
        assert_eq!(confusion(&[T], &[N]).unwrap().fp, 1);
        assert!(matches!(confusion(&[T], &[]), Err(EvalError::LengthMismatch { .. })));
    }

    #[test]
    fn degenerate_prf1() {
        let m = prf1(Confusion::default());
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert!(m.precision_undefined && m.recall_undefined && m.f1_undefined);
        let m = prf1(Confusion { tp: 3, fp: 1, tn: 5, fn_: 3 });
        assert_eq!((m.precision, m.recall), (0.75, 0.5));
        assert!((m.f1 - 0.6).abs() < 1e-15);
        assert!(!m.f1_undefined);
    }

    #[test]
    fn roc_shapes() {
        let golds = [T, T, N, N];
        let pts = roc_curve(&[0.9, 0.8, 0.2, 0.1], &golds).unwrap();
        assert!(pts.contains(&RocPoint { fpr: 0.0, tpr: 1.0 }));
        assert_eq!(auc(&[0.9, 0.8, 0.2, 0.1], &golds).unwrap(), 1.0);
        let flat = roc_curve(&[0.3; 4], &golds).unwrap();
        assert_eq!(flat, vec![RocPoint { fpr: 0.0, tpr: 0.0 }, RocPoint { fpr: 1.0, tpr: 1.0 }]);
        assert_eq!(auc(&[0.3; 4], &golds).unwrap(), 0.5);
        assert!(matches!(roc_curve(&[0.1, 0.2], &[T, T]), Err(EvalError::DegenerateLabels)));
        assert!(matches!(auc(&[f64::NAN, 0.2], &[T, N]), Err(EvalError::InvalidScore(0))));
    }

    fn pairwise(scores: &[f64], golds: &[Label]) -> f64 {
        let (mut wins, mut pairs) = (0.0, 0u64);
        for (i, gi) in golds.iter().enumerate() {
            for (j, gj) in golds.iter().enumerate() {
                if gi.is_positive() && !gj.is_positive() {
                    pairs += 1;
                    if scores[i] > scores[j] {
                        wins += 1.0;
                    } else if scores[i] == scores[j] {
                        wins += 0.5;
                    }
                }
            }
        }
        wins / pairs as f64
    }

    fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<Label>)> {
        (2usize..300).prop_flat_map(|n| {
            (
                proptest::collection::vec((0u8..20).prop_map(|k| k as f64 / 4.0), n),
                proptest::collection::vec(any::<bool>().prop_map(Label::from_positive), n),
            )
        })
    }

    proptest! {
        #[test]
        fn auc_matches_pairwise((scores, golds) in instance()) {
            prop_assume!(golds.iter().any(|g| g.is_positive()) && golds.iter().any(|g| !g.is_positive()));
            let a = auc(&scores, &golds).unwrap();
            prop_assert!((a - pairwise(&scores, &golds)).abs() <= 1e-12);
            let squashed: Vec<f64> = scores.iter().map(|s| (s * 3.0).exp()).collect();
            prop_assert_eq!(auc(&squashed, &golds).unwrap(), a);
        }

        #[test]
        fn roc_points_match_threshold_sweep((scores, golds) in instance()) {
            prop_assume!(golds.iter().any(|g| g.is_positive()) && golds.iter().any(|g| !g.is_positive()));
            let pts = roc_curve(&scores, &golds).unwrap();
            prop_assert_eq!(pts[0], RocPoint { fpr: 0.0, tpr: 0.0 });
            prop_assert_eq!(*pts.last().unwrap(), RocPoint { fpr: 1.0, tpr: 1.0 });
            for w in pts.windows(2) {
                prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
            }
            let mut thresholds = scores.clone();
            thresholds.sort_by(|a, b| b.total_cmp(a));
            thresholds.dedup();
            prop_assert_eq!(pts.len(), thresholds.len() + 1);
            let p = golds.iter().filter(|g| g.is_positive()).count() as f64;
            let n = golds.len() as f64 - p;
            for (t, pt) in thresholds.iter().zip(&pts[1..]) {
                let preds: Vec<Label> = scores.iter().map(|&s| Label::from_positive(s >= *t)).collect();
                let c = confusion(&preds, &golds).unwrap();
                prop_assert_eq!(pt.fpr, c.fp as f64 / n);
                prop_assert_eq!(pt.tpr, c.tp as f64 / p);
            }
        }

        #[test]
        fn confusion_matches_recount(pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 0..1000)) {
            let preds: Vec<Label> = pairs.iter().map(|p| Label::from_positive(p.0)).collect();
            let golds: Vec<Label> = pairs.iter().map(|p| Label::from_positive(p.1)).collect();
            let c = confusion(&preds, &golds).unwrap();
            prop_assert_eq!(c.tp as usize, pairs.iter().filter(|p| p.0 && p.1).count());
            prop_assert_eq!(c.fp as usize, pairs.iter().filter(|p| p.0 && !p.1).count());
            prop_assert_eq!(c.tn as usize, pairs.iter().filter(|p| !p.0 && !p.1).count());
            prop_assert_eq!(c.fn_ as usize, pairs.iter().filter(|p| !p.0 && p.1).count());
        }

        #[test]
        fn f1_is_between_precision_and_recall(tp in 0u64..500, fp in 0u64..500, fn_ in 0u64..500) {
            let m = prf1(Confusion { tp, fp, tn: 0, fn_ });
            for v in [m.precision, m.recall, m.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if m.precision > 0.0 && m.recall > 0.0 {
                prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-15);
                prop_assert!(m.f1 >= m.precision.min(m.recall) - 1e-15);
            }
        }
    }
}

//! Keyword bootstrap, gold-set assembly and positive-class metrics.

mod gold;
mod metrics;

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::classify::{Label, Schema};

pub use gold::{
    assemble_gold, balanced_sample, bootstrap_candidates, check_disjoint, disjoint_sample, read_annotations,
    write_annotations, ClassBalance, GoldSet, TermQuery, DEFAULT_TERMS, IMBALANCE_THRESHOLD,
};
pub use metrics::{auc, confusion, f1_score, prf1, roc_curve, Confusion, Prf1, RocPoint};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("both classes must be present")]
    DegenerateLabels,
    #[error("score at position {0} is NaN")]
    InvalidScore(usize),
    #[error("term query is empty")]
    EmptyQuery,
    #[error("invalid query term `{0}`: terms are single lowercase words")]
    InvalidTerm(String),
    #[error("annotated tweet {0} is not among the candidates")]
    AnnotationOrphan(u64),
    #[error("tweet {0} is annotated in both train and test")]
    LeakageDetected(u64),
    #[error("tweet {0} is annotated twice")]
    DuplicateAnnotation(u64),
    #[error("need {wanted} {label} examples, only {available} available")]
    InsufficientExamples {
        label: Label,
        wanted: usize,
        available: usize,
    },
    #[error("feature schema mismatch: expected {expected:?}, found {found:?}")]
    SchemaMismatch { expected: Schema, found: Schema },
    #[error("{0}")]
    InvalidInput(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub f1_undefined: bool,
    pub threshold: f64,
    pub roc_points: Vec<RocPoint>,
    pub auc: f64,
}

impl EvalReport {
    pub fn confusion(&self) -> Confusion {
        Confusion {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes the ROC points as an `fpr,tpr` CSV.
    pub fn write_roc_csv<W: Write>(&self, w: W) -> Result<(), EvalError> {
        let mut writer = csv::Writer::from_writer(w);
        for p in &self.roc_points {
            writer.serialize(p)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Labels each score against `threshold` (positive iff strictly above) and
/// gathers every metric.
pub fn evaluate(scores: &[f64], golds: &[Label], threshold: f64) -> Result<EvalReport, EvalError> {
    let preds: Vec<Label> = scores.iter().map(|&s| Label::from_positive(s > threshold)).collect();
    let c = confusion(&preds, golds)?;
    let m = prf1(c);
    Ok(EvalReport {
        tp: c.tp,
        fp: c.fp,
        tn: c.tn,
        fn_: c.fn_,
        precision: m.precision,
        recall: m.recall,
        f1: m.f1,
        precision_undefined: m.precision_undefined,
        recall_undefined: m.recall_undefined,
        f1_undefined: m.f1_undefined,
        threshold,
        roc_points: roc_curve(scores, golds)?,
        auc: auc(scores, golds)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{NonTravel as N, Travel as T};

    #[test]
    fn report_fields() {
        let r = evaluate(&[0.9, 0.4, 0.6, 0.1], &[T, T, N, N], 0.5).unwrap();
        assert_eq!(r.confusion(), Confusion { tp: 1, fp: 1, tn: 1, fn_: 1 });
        assert_eq!((r.precision, r.recall, r.f1), (0.5, 0.5, 0.5));
        assert_eq!(r.auc, 0.75);
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["fn"], 1);
        assert_eq!(json["roc_points"][0]["fpr"], 0.0);
        let mut csv = Vec::new();
        r.write_roc_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("fpr,tpr\n0.0,0.0\n"));
    }
}

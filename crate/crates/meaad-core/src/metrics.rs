//! Detection metrics: confusion counts, F1, and the ROC curve with its area.
//!
//! The positive class is "attack" (label 1) throughout. Ties in scores
//! contribute half credit, the usual Mann-Whitney convention.

use crate::error::{Error, Result};

/// Confusion counts with the positive class being "attack".
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Threshold-level metrics derived from hard predictions.
#[derive(Debug, Clone, Copy)]
pub struct ClassificationReport {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// ROC curve points and the trapezoidal area under them.
#[derive(Debug, Clone)]
pub struct RocCurve {
    pub auc: f64,
    /// (false positive rate, true positive rate), from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
}

/// Everything the evaluation harness reports for one run.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub counts: ConfusionCounts,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub roc_auc: f64,
    pub roc_points: Vec<(f64, f64)>,
}

impl MetricsReport {
    /// Combines hard predictions (for accuracy/F1) with scores (for ROC).
    pub fn compute(scores: &[f64], predictions: &[u8], labels: &[u8]) -> Result<Self> {
        let cls = confusion_and_f1(predictions, labels)?;
        let roc = roc_auc(scores, labels)?;
        Ok(Self {
            counts: cls.counts,
            accuracy: cls.accuracy,
            precision: cls.precision,
            recall: cls.recall,
            f1: cls.f1,
            roc_auc: roc.auc,
            roc_points: roc.points,
        })
    }
}

fn validate_labels(labels: &[u8]) -> Result<()> {
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::InvalidConfig("labels must be 0 or 1".into()));
    }
    Ok(())
}

/// Confusion counts plus accuracy, precision, recall, and F1.
///
/// Precision and recall are 0 when their denominators are 0, and F1 is 0
/// when precision + recall is 0.
pub fn confusion_and_f1(predictions: &[u8], labels: &[u8]) -> Result<ClassificationReport> {
    if predictions.len() != labels.len() {
        return Err(Error::LengthMismatch(predictions.len(), labels.len()));
    }
    if predictions.is_empty() {
        return Err(Error::Empty);
    }
    validate_labels(predictions)?;
    validate_labels(labels)?;

    let mut counts = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
    };
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (1, 1) => counts.tp += 1,
            (1, 0) => counts.fp += 1,
            (0, 0) => counts.tn += 1,
            _ => counts.fn_ += 1,
        }
    }
    let accuracy = (counts.tp + counts.tn) as f64 / counts.total() as f64;
    let precision = if counts.tp + counts.fp > 0 {
        counts.tp as f64 / (counts.tp + counts.fp) as f64
    } else {
        0.0
    };
    let recall = if counts.tp + counts.fn_ > 0 {
        counts.tp as f64 / (counts.tp + counts.fn_) as f64
    } else {
        0.0
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(ClassificationReport {
        counts,
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// ROC curve from scores, sweeping every distinct score as a threshold
/// (prediction is positive when score >= threshold), plus the trapezoidal
/// area under it.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    if scores.is_empty() {
        return Err(Error::Empty);
    }
    validate_labels(labels)?;
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score {bad}")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = Vec::new();
    points.push((0.0, 0.0));
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        // Consume the whole group of tied scores before emitting a point.
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }

    Ok(RocCurve { auc, points })
}

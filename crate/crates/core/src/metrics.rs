//! Classification metrics over a node mask.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct MetricsReport {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    /// `confusion[true][pred]`
    pub confusion: Vec<Vec<usize>>,
    pub support: usize,
}

/// Row-wise argmax, ties to the lower class.
pub fn argmax_rows(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|i| {
            let row = logits.row(i);
            let mut best = 0;
            for (c, &x) in row.iter().enumerate() {
                if x > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Accuracy, balanced accuracy (mean per-class recall) and macro-F1.
/// Classes without support in the mask count with recall 0; any F1 whose
/// precision and recall are both 0 is 0.
pub fn compute_metrics(pred: &[usize], labels: &[Option<usize>], mask: &[bool], num_classes: usize) -> Result<MetricsReport> {
    if pred.len() != labels.len() || mask.len() != labels.len() {
        return Err(Error::Shape("predictions, labels and mask disagree".into()));
    }
    let mut confusion = vec![vec![0usize; num_classes]; num_classes];
    let mut support = 0;
    for i in (0..pred.len()).filter(|&i| mask[i]) {
        let y = labels[i].ok_or_else(|| Error::InvalidArgument(format!("evaluated node {i} is unlabeled")))?;
        if y >= num_classes || pred[i] >= num_classes {
            return Err(Error::InvalidArgument(format!("class out of range at node {i}")));
        }
        confusion[y][pred[i]] += 1;
        support += 1;
    }
    if support == 0 {
        return Err(Error::InvalidArgument("evaluation mask is empty".into()));
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let mut precision = vec![0.0; num_classes];
    let mut recall = vec![0.0; num_classes];
    let mut f1 = vec![0.0; num_classes];
    let mut correct = 0;
    for c in 0..num_classes {
        let tp = confusion[c][c];
        correct += tp;
        let actual: usize = confusion[c].iter().sum();
        let predicted: usize = confusion.iter().map(|r| r[c]).sum();
        precision[c] = ratio(tp, predicted);
        recall[c] = ratio(tp, actual);
        let s = precision[c] + recall[c];
        f1[c] = if s == 0.0 { 0.0 } else { 2.0 * precision[c] * recall[c] / s };
    }
    let m = num_classes as f64;
    Ok(MetricsReport {
        accuracy: correct as f64 / support as f64,
        balanced_accuracy: recall.iter().sum::<f64>() / m,
        macro_f1: f1.iter().sum::<f64>() / m,
        precision,
        recall,
        f1,
        confusion,
        support,
    })
}

/// Mean and sample standard deviation (0 for fewer than two values).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

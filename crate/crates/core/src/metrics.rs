//! Confusion-matrix metrics for classification and segmentation.

use serde::Serialize;

use crate::error::{Error, Result};

/// FloodNet class order used for per-class IoU reports.
pub const FLOODNET_CLASSES: [&str; 10] = [
    "Background",
    "Building Flooded",
    "Building Non-Flooded",
    "Road Flooded",
    "Road Non-Flooded",
    "Water",
    "Tree",
    "Vehicle",
    "Pool",
    "Grass",
];

/// Report column names: the FloodNet names for 10 classes, `class_i` otherwise.
pub fn class_names(n_classes: usize) -> Vec<String> {
    if n_classes == FLOODNET_CLASSES.len() {
        FLOODNET_CLASSES.iter().map(|s| s.to_string()).collect()
    } else {
        (0..n_classes).map(|i| format!("class_{i}")).collect()
    }
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        ConfusionMatrix {
            n_classes,
            counts: vec![0; n_classes * n_classes],
        }
    }

    pub fn from_labels(pred: &[usize], truth: &[usize], n_classes: usize) -> Result<Self> {
        let mut cm = Self::new(n_classes);
        cm.accumulate(pred, truth)?;
        Ok(cm)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Adds one count per (pred, truth) pair. Nothing is added if any
    /// value is out of range.
    pub fn accumulate(&mut self, pred: &[usize], truth: &[usize]) -> Result<()> {
        if pred.len() != truth.len() {
            return Err(Error::Shape(format!(
                "{} predictions for {} targets",
                pred.len(),
                truth.len()
            )));
        }
        if let Some(&bad) = pred.iter().chain(truth).find(|&&c| c >= self.n_classes) {
            return Err(Error::InvalidArgument(format!(
                "class {bad} out of range for {} classes",
                self.n_classes
            )));
        }
        for (&p, &t) in pred.iter().zip(truth) {
            self.counts[t * self.n_classes + p] += 1;
        }
        Ok(())
    }

    /// Element-wise sum, for combining matrices built in parallel.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.n_classes != self.n_classes {
            return Err(Error::Shape(format!(
                "cannot merge {}-class and {}-class matrices",
                self.n_classes, other.n_classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.n_classes).map(|c| self.get(c, c)).sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(truth, p)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, pred)).sum()
    }

    /// Counts as nested rows.
    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.n_classes).map(|r| r.to_vec()).collect()
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Names of the ratios that were 0/0 and reported as 0.
    pub undefined: Vec<&'static str>,
}

pub fn classification_metrics(cm: &ConfusionMatrix, positive_class: usize) -> ClassificationMetrics {
    assert!(positive_class < cm.n_classes, "positive class out of range");
    let mut undefined = Vec::new();
    let mut or_zero = |name, r: Option<f64>| {
        r.unwrap_or_else(|| {
            undefined.push(name);
            0.0
        })
    };
    let tp = cm.get(positive_class, positive_class);
    let accuracy = or_zero("accuracy", ratio(cm.trace(), cm.total()));
    let precision = or_zero("precision", ratio(tp, cm.col_sum(positive_class)));
    let recall = or_zero("recall", ratio(tp, cm.row_sum(positive_class)));
    // 2tp / (2tp + fp + fn), which stays defined when only one of precision/recall is
    let f1 = or_zero(
        "f1",
        ratio(2 * tp, cm.row_sum(positive_class) + cm.col_sum(positive_class)),
    );
    ClassificationMetrics {
        accuracy,
        precision,
        recall,
        f1,
        undefined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentationMetrics {
    pub per_class_iou: Vec<f64>,
    pub miou: f64,
    /// Classes absent from both prediction and truth; their IoU is reported as 0.
    pub empty_classes: Vec<usize>,
}

pub fn segmentation_metrics(cm: &ConfusionMatrix) -> SegmentationMetrics {
    let mut empty_classes = Vec::new();
    let per_class_iou: Vec<f64> = (0..cm.n_classes)
        .map(|c| {
            let inter = cm.get(c, c);
            let union = cm.row_sum(c) + cm.col_sum(c) - inter;
            ratio(inter, union).unwrap_or_else(|| {
                empty_classes.push(c);
                0.0
            })
        })
        .collect();
    let miou = per_class_iou.iter().sum::<f64>() / cm.n_classes.max(1) as f64;
    SegmentationMetrics {
        per_class_iou,
        miou,
        empty_classes,
    }
}

/// Evaluation result for either task.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metrics {
    Classification(ClassificationMetrics),
    Segmentation(SegmentationMetrics),
}

impl Metrics {
    /// F1 for classification, mIoU for segmentation.
    pub fn score(&self) -> f64 {
        match self {
            Metrics::Classification(m) => m.f1,
            Metrics::Segmentation(m) => m.miou,
        }
    }

    /// Column names and values for one row of a metrics CSV.
    pub fn columns(&self) -> Vec<(String, f64)> {
        match self {
            Metrics::Classification(m) => vec![
                ("accuracy".into(), m.accuracy),
                ("precision".into(), m.precision),
                ("recall".into(), m.recall),
                ("f1".into(), m.f1),
            ],
            Metrics::Segmentation(m) => {
                let mut cols: Vec<(String, f64)> = (0..m.per_class_iou.len())
                    .map(|c| (format!("iou_{c}"), m.per_class_iou[c]))
                    .collect();
                cols.push(("miou".into(), m.miou));
                cols
            }
        }
    }
}

use std::fmt::Write as _;

use crate::data::Task;
use crate::metrics::Metrics;
use crate::optim::OptimizerKind;

/// Losses of one optimizer step. `pseudo` is the unweighted pseudo-label
/// term, absent when the step had no pseudo batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLoss {
    pub epoch: usize,
    pub step: usize,
    pub alpha: f64,
    pub sup: f64,
    pub pseudo: Option<f64>,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub alpha: f64,
    pub lr: f64,
    pub optimizer: OptimizerKind,
    /// Step means. `pseudo_loss` averages over pseudo steps only, 0 if none.
    pub sup_loss: f64,
    pub pseudo_loss: f64,
    pub total_loss: f64,
    pub n_pseudo: usize,
    pub metrics: Metrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsLog {
    pub task: Task,
    pub records: Vec<EpochRecord>,
    pub steps: Vec<StepLoss>,
    pub warnings: Vec<String>,
}

impl MetricsLog {
    pub fn new(task: Task) -> Self {
        MetricsLog {
            task,
            records: Vec::new(),
            steps: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        log::warn!("{msg}");
        self.warnings.push(msg);
    }

    pub fn last(&self) -> Option<&EpochRecord> {
        self.records.last()
    }

    /// Total loss of every step, in order.
    pub fn loss_trace(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.total).collect()
    }

    /// One header line plus one line per epoch. Floats use the shortest
    /// representation that parses back to the same value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,alpha,lr,optimizer,sup_loss,pseudo_loss,total_loss");
        if let Some(first) = self.records.first() {
            for (name, _) in first.metrics.columns() {
                out.push(',');
                out.push_str(&name);
            }
        }
        out.push('\n');
        for r in &self.records {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{}",
                r.epoch, r.alpha, r.lr, r.optimizer, r.sup_loss, r.pseudo_loss, r.total_loss
            );
            for (_, v) in r.metrics.columns() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

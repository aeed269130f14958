//! Run directories: metrics CSV, JSON summary, per-class IoU table,
//! resolved config and checkpoints, plus a plain-text rendering of them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentConfig, TrainOutcome};
use crate::data::{
    gen_classification_splits, gen_segmentation_splits, load_manifest, ClassificationSpec, Dataset,
    SegmentationSpec, Task,
};
use crate::error::{Error, Result};
use crate::metrics::{class_names, Metrics};
use crate::nn::{save_checkpoint, Model};
use crate::scalar::Scalar;

/// The manifest named in the config, or a synthetic dataset generated from
/// the `gen_*` keys and the run seed.
pub fn load_dataset<T: Scalar>(cfg: &ExperimentConfig) -> Result<Dataset<T>> {
    if let Some(path) = &cfg.manifest {
        return load_manifest(path, cfg.task, cfg.n_classes);
    }
    match cfg.task {
        Task::Classification => gen_classification_splits(&ClassificationSpec {
            n_labeled: cfg.gen_labeled,
            n_unlabeled: cfg.gen_unlabeled,
            n_val: cfg.gen_val,
            n_test: cfg.gen_test,
            positive_fraction: cfg.positive_fraction,
            image_size: cfg.image_size,
            seed: cfg.seed,
        }),
        Task::Segmentation => gen_segmentation_splits(&SegmentationSpec {
            n_labeled: cfg.gen_labeled,
            n_unlabeled: cfg.gen_unlabeled,
            n_val: cfg.gen_val,
            n_test: cfg.gen_test,
            n_classes: cfg.n_classes,
            image_size: cfg.image_size,
            seed: cfg.seed,
        }),
    }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub task: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub final_val: Metrics,
    pub best_val: Metrics,
    pub test_final: Option<Metrics>,
    pub test_best: Option<Metrics>,
    pub test_supervised: Option<Metrics>,
    pub warnings: Vec<String>,
    pub config: BTreeMap<String, String>,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes `metrics.csv`, `summary.json`, `resolved_config.cfg`,
/// `ckpt_final`, `ckpt_best` and, for segmentation, `per_class_iou.csv`.
pub fn write_outputs<T: Scalar, M: Model<T>>(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcome: &TrainOutcome<M>,
) -> Result<RunSummary> {
    let log = &outcome.log;
    let (Some(first), Some(last)) = (log.records.first(), log.records.last()) else {
        return Err(Error::InvalidArgument("metrics log is empty; nothing to write".into()));
    };
    let best_val = log
        .records
        .iter()
        .find(|r| r.epoch == outcome.best_epoch)
        .unwrap_or(first)
        .metrics
        .clone();
    let test = outcome.test.as_ref();
    let summary = RunSummary {
        task: log.task.to_string(),
        epochs: log.records.len(),
        best_epoch: outcome.best_epoch,
        final_val: last.metrics.clone(),
        best_val,
        test_final: test.map(|t| t.final_model.0.clone()),
        test_best: test.map(|t| t.best_model.0.clone()),
        test_supervised: test.and_then(|t| t.supervised_model.as_ref().map(|m| m.0.clone())),
        warnings: log.warnings.clone(),
        config: cfg.to_map(),
    };

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(&dir.join("metrics.csv"), log.to_csv())?;
    write(&dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    write(&dir.join("resolved_config.cfg"), cfg.to_cfg_string())?;
    if log.task == Task::Segmentation {
        let mut rows = vec![("val_final", &summary.final_val), ("val_best", &summary.best_val)];
        for (name, m) in [
            ("test_final", &summary.test_final),
            ("test_best", &summary.test_best),
            ("test_supervised", &summary.test_supervised),
        ] {
            if let Some(m) = m {
                rows.push((name, m));
            }
        }
        write(&dir.join("per_class_iou.csv"), iou_table(cfg.n_classes, &rows))?;
    }
    save_checkpoint(&outcome.model, &dir.join("ckpt_final"))?;
    save_checkpoint(&outcome.best_model, &dir.join("ckpt_best"))?;
    Ok(summary)
}

fn iou_table(n_classes: usize, rows: &[(&str, &Metrics)]) -> String {
    let mut out = String::from("model");
    for name in class_names(n_classes) {
        out.push(',');
        out.push_str(&name);
    }
    out.push_str(",mIoU\n");
    for (name, m) in rows {
        if let Metrics::Segmentation(s) = m {
            out.push_str(name);
            for v in s.per_class_iou.iter().chain([&s.miou]) {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.into(),
            msg: format!("{other:?}"),
        },
    })?;
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Numbers to 4 decimals; everything else verbatim.
fn cell(s: &str) -> String {
    match s.parse::<f64>() {
        Ok(v) if s.contains('.') || s.contains('e') => format!("{v:.4}"),
        _ => s.to_string(),
    }
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let rows: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(|c| cell(c)).collect()).collect();
    let widths: Vec<usize> = (0..header.len())
        .map(|i| rows.iter().map(|r| r.get(i).map_or(0, |c| c.len())).chain([header[i].len()]).max().unwrap_or(0))
        .collect();
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
            + "\n"
    };
    let mut out = line(header);
    out.push_str(&line(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>()));
    for r in &rows {
        out.push_str(&line(r));
    }
    out
}

/// Human-readable tables for a run directory: the per-epoch log, and for
/// segmentation runs the per-class IoU table.
pub fn render_report(dir: &Path) -> Result<String> {
    let (header, rows) = read_csv(&dir.join("metrics.csv"))?;
    if rows.is_empty() {
        return Err(Error::Format {
            path: dir.join("metrics.csv"),
            msg: "no epochs recorded".into(),
        });
    }
    let mut out = format!("Training log ({} epochs)\n\n", rows.len());
    out.push_str(&table(&header, &rows));
    let iou = dir.join("per_class_iou.csv");
    if iou.exists() {
        let (header, rows) = read_csv(&iou)?;
        out.push_str("\nPer-class IoU\n\n");
        out.push_str(&table(&header, &rows));
    } else if let Some(last) = rows.last() {
        let pick = |name: &str| header.iter().position(|h| h == name).map(|i| cell(&last[i]));
        if let (Some(acc), Some(f1)) = (pick("accuracy"), pick("f1")) {
            let _ = write!(out, "\nFinal validation accuracy {acc}, F1 {f1}\n");
        }
    }
    Ok(out)
}

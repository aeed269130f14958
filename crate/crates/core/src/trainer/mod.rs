//! The pseudo-label training loop.
//!
//! Each epoch draws labeled batches (class-balanced for classification) and,
//! once the alpha ramp is positive, pairs every step with a batch of
//! pseudo-labeled samples. The step loss is `sup + α·pseudo`. Pseudo labels
//! are hard predictions made at the end of the previous epoch on a fresh
//! random subset of the unlabeled pool.

mod config;
mod log;
mod report;
mod schedule;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;

pub use config::{ExperimentConfig, KEYS};
pub use log::{EpochRecord, MetricsLog, StepLoss};
pub use report::{load_dataset, render_report, write_outputs, RunSummary};
pub use schedule::AlphaSchedule;

use crate::data::{subsample_unlabeled, Dataset, Sample, ShuffleCycler, Split, Task, WeightedSampler};
use crate::error::{Error, Result};
use crate::image::{stack, Image, Mask};
use crate::losses::{bce, combined_seg_loss, semi_supervised_loss, LossWeights};
use crate::metrics::{classification_metrics, segmentation_metrics, ConfusionMatrix, Metrics};
use crate::nn::{ClassifierModel, Model, ModelConfig, ModelKind, SegmenterModel};
use crate::optim::{Optimizer, StepLr};
use crate::preprocess::{
    argmax_channels, augment, one_hot, resize, resize_mask, AugmentConfig, FilterPipeline, Interpolation,
};
use crate::scalar::Scalar;
use crate::seeds::{rng_for, stream};
use crate::tensor::{no_grad, Tensor};

/// A hard prediction for one unlabeled sample.
#[derive(Debug, Clone, PartialEq)]
pub enum PseudoLabel {
    Class(usize),
    Mask(Mask),
}

/// Pseudo labels keyed by sample id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudoLabelStore {
    /// Epoch whose final model produced the labels; `None` for the
    /// untrained model.
    pub epoch: Option<usize>,
    pub labels: BTreeMap<String, PseudoLabel>,
}

impl PseudoLabelStore {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&PseudoLabel> {
        self.labels.get(id)
    }
}

/// Hard labels from a batch of logits: binary logits above 0 give class 1;
/// N×C×H×W logits give the per-pixel channel argmax, ties going to the
/// lower class.
pub fn labels_from_logits<T: Scalar>(kind: ModelKind, logits: &Tensor<T>) -> Result<Vec<PseudoLabel>> {
    match kind {
        ModelKind::Classifier => Ok(logits
            .data()
            .iter()
            .map(|&z| PseudoLabel::Class(usize::from(z > T::zero())))
            .collect()),
        ModelKind::Segmenter => {
            let (n, c, h, w) = crate::tensor::nchw("segmentation logits", logits)?;
            let per = c * h * w;
            (0..n)
                .map(|i| {
                    let img = Image::new(c, h, w, logits.data()[i * per..(i + 1) * per].to_vec())?;
                    Ok(PseudoLabel::Mask(argmax_channels(&img)))
                })
                .collect()
        }
    }
}

/// Hard predictions for a list of images, computed without recording
/// gradients.
pub fn predict<T: Scalar, M: Model<T>>(model: &M, images: &[&Image<T>], batch_size: usize) -> Result<Vec<PseudoLabel>> {
    no_grad(|| {
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(batch_size.max(1)) {
            out.extend(labels_from_logits(model.kind(), &model.forward(&stack(chunk)?)?)?);
        }
        Ok(out)
    })
}

/// Labels every sample in `samples`, which must all be unlabeled.
pub fn generate_pseudo_labels<T: Scalar, M: Model<T>>(
    model: &M,
    samples: &[&Sample<T>],
    batch_size: usize,
    epoch: Option<usize>,
) -> Result<PseudoLabelStore> {
    if let Some(s) = samples.iter().find(|s| s.labeled) {
        return Err(Error::InvalidArgument(format!("sample `{}` is labeled", s.id)));
    }
    let images: Vec<&Image<T>> = samples.iter().map(|s| &s.image).collect();
    let labels = samples
        .iter()
        .map(|s| s.id.clone())
        .zip(predict(model, &images, batch_size)?)
        .collect();
    Ok(PseudoLabelStore { epoch, labels })
}

/// Metrics over the accumulated confusion matrix of a fully labeled dataset.
pub fn evaluate<T: Scalar, M: Model<T>>(
    model: &M,
    dataset: &Dataset<T>,
    positive_class: usize,
    batch_size: usize,
) -> Result<(Metrics, ConfusionMatrix)> {
    if let Some(s) = dataset.samples.iter().find(|s| !s.labeled) {
        return Err(Error::InvalidArgument(format!("cannot evaluate on unlabeled sample `{}`", s.id)));
    }
    if model.config().n_classes != dataset.n_classes {
        return Err(Error::InvalidArgument(format!(
            "model has {} classes, dataset {}",
            model.config().n_classes,
            dataset.n_classes
        )));
    }
    let images: Vec<&Image<T>> = dataset.samples.iter().map(|s| &s.image).collect();
    let preds = predict(model, &images, batch_size)?;
    let mut cm = ConfusionMatrix::new(dataset.n_classes);
    for (s, p) in dataset.samples.iter().zip(preds) {
        match (p, s.label, &s.mask) {
            (PseudoLabel::Class(p), Some(t), _) => cm.accumulate(&[p], &[t])?,
            (PseudoLabel::Mask(p), _, Some(t)) => {
                let pred: Vec<usize> = p.indices().collect();
                let truth: Vec<usize> = t.indices().collect();
                cm.accumulate(&pred, &truth)?
            }
            _ => return Err(Error::InvalidArgument(format!("sample `{}` does not fit the model", s.id))),
        }
    }
    let metrics = match dataset.task {
        Task::Classification => Metrics::Classification(classification_metrics(&cm, positive_class)),
        Task::Segmentation => Metrics::Segmentation(segmentation_metrics(&cm)),
    };
    Ok((metrics, cm))
}

/// Resizes every image (and mask) to the configured square size and applies
/// the smoothing pipeline when enabled.
pub fn prepare_dataset<T: Scalar>(cfg: &ExperimentConfig, dataset: &Dataset<T>) -> Result<Dataset<T>> {
    let size = cfg.image_size;
    let pipeline = FilterPipeline::default();
    let samples = dataset
        .samples
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if (s.image.height, s.image.width) != (size, size) {
                s.image = resize(&s.image, size, size, Interpolation::Bilinear)?;
                if let Some(m) = &s.mask {
                    s.mask = Some(resize_mask(m, size, size)?);
                }
            }
            if cfg.preprocess {
                s.image = pipeline.apply(&s.image)?;
            }
            Ok(s)
        })
        .collect::<Result<_>>()?;
    Dataset::new(dataset.task, dataset.n_classes, samples)
}

/// Test-split metrics of the models a run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct TestMetrics {
    pub final_model: (Metrics, ConfusionMatrix),
    pub best_model: (Metrics, ConfusionMatrix),
    /// The model as it stood when pseudo labels were first produced.
    pub supervised_model: Option<(Metrics, ConfusionMatrix)>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    /// Highest validation score; the earliest epoch wins ties.
    pub best_model: M,
    pub best_epoch: usize,
    /// Snapshot at the end of the last epoch before the pseudo-label weight
    /// became positive.
    pub supervised_model: Option<M>,
    pub log: MetricsLog,
    /// Validation confusion matrix of the final model.
    pub confusion: ConfusionMatrix,
    pub test: Option<TestMetrics>,
}

pub fn train_classification<T: Scalar>(
    cfg: &ExperimentConfig,
    dataset: &Dataset<T>,
) -> Result<TrainOutcome<ClassifierModel<T>>> {
    check_task(cfg, dataset, Task::Classification)?;
    let data = prepare_dataset(cfg, dataset)?;
    let model = ClassifierModel::new(model_config(cfg, &data))?;
    train(cfg, &data, model)
}

pub fn train_segmentation<T: Scalar>(
    cfg: &ExperimentConfig,
    dataset: &Dataset<T>,
) -> Result<TrainOutcome<SegmenterModel<T>>> {
    check_task(cfg, dataset, Task::Segmentation)?;
    let data = prepare_dataset(cfg, dataset)?;
    let model = SegmenterModel::new(model_config(cfg, &data))?;
    train(cfg, &data, model)
}

fn check_task<T: Scalar>(cfg: &ExperimentConfig, dataset: &Dataset<T>, task: Task) -> Result<()> {
    if cfg.task != task || dataset.task != task {
        return Err(Error::config("task", format!("expected {task}, config says {}, dataset is {}", cfg.task, dataset.task)));
    }
    if dataset.n_classes != cfg.n_classes {
        return Err(Error::config(
            "n_classes",
            format!("config has {}, dataset has {}", cfg.n_classes, dataset.n_classes),
        ));
    }
    cfg.validate()
}

/// Model shape for a run; the seed of the run also seeds initialization.
pub fn model_config<T: Scalar>(cfg: &ExperimentConfig, dataset: &Dataset<T>) -> ModelConfig {
    ModelConfig {
        in_channels: dataset.samples.first().map_or(3, |s| s.image.channels),
        n_classes: cfg.n_classes,
        base_width: cfg.base_width,
        seed: cfg.seed,
    }
}

fn batch_targets<T: Scalar>(task: Task, n_classes: usize, batch: &[Sample<T>]) -> Result<Tensor<T>> {
    match task {
        Task::Classification => {
            let labels = batch
                .iter()
                .map(|s| s.label.map(|l| T::of(l as f64)))
                .collect::<Option<Vec<T>>>()
                .ok_or_else(|| Error::InvalidArgument("training batch without labels".into()))?;
            Tensor::new(&[batch.len(), 1], labels)
        }
        Task::Segmentation => {
            let onehots = batch
                .iter()
                .map(|s| {
                    let m = s
                        .mask
                        .as_ref()
                        .ok_or_else(|| Error::InvalidArgument("training batch without masks".into()))?;
                    one_hot::<T>(m, n_classes)
                })
                .collect::<Result<Vec<_>>>()?;
            stack(&onehots.iter().collect::<Vec<_>>())
        }
    }
}

fn batch_loss<T: Scalar, M: Model<T>>(
    model: &M,
    task: Task,
    n_classes: usize,
    weights: &LossWeights,
    batch: &[Sample<T>],
) -> Result<Tensor<T>> {
    let images: Vec<&Image<T>> = batch.iter().map(|s| &s.image).collect();
    let logits = model.forward(&stack(&images)?)?;
    let targets = batch_targets(task, n_classes, batch)?;
    match task {
        Task::Classification => bce(&logits.sigmoid(), &targets),
        Task::Segmentation => combined_seg_loss(&logits, &targets, weights),
    }
}

enum LabeledSource {
    Balanced(WeightedSampler),
    Shuffled(ShuffleCycler),
}

impl LabeledSource {
    fn next_batch(&mut self, size: usize) -> Vec<usize> {
        match self {
            LabeledSource::Balanced(s) => s.sample(size),
            LabeledSource::Shuffled(c) => c.next_batch(size),
        }
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn train<T: Scalar, M: Model<T>>(cfg: &ExperimentConfig, data: &Dataset<T>, mut model: M) -> Result<TrainOutcome<M>> {
    let task = data.task;
    let bs = cfg.batch_size;
    let mut log = MetricsLog::new(task);

    let train_split = data.split(Split::Train);
    let labeled: Vec<&Sample<T>> = train_split.samples.iter().filter(|s| s.labeled).collect();
    let pool: Vec<&Sample<T>> = train_split.samples.iter().filter(|s| !s.labeled).collect();
    if labeled.is_empty() {
        return Err(Error::Sampler("no labeled training samples".into()));
    }
    let mut source = if task == Task::Classification && cfg.balanced_sampling {
        let labels: Vec<usize> = labeled.iter().filter_map(|s| s.label).collect();
        LabeledSource::Balanced(WeightedSampler::new(&labels, data.n_classes, cfg.seed)?)
    } else {
        LabeledSource::Shuffled(ShuffleCycler::new(
            labeled.len(),
            rng_for(cfg.seed, stream::LABELED_SAMPLER, 0),
        )?)
    };

    let mut val = data.split(Split::Val);
    let test = data.split(Split::Test);
    if val.is_empty() {
        if test.is_empty() {
            log.warn("no validation or test split; validating on the labeled training samples");
            val = train_split.labeled();
        } else {
            log.warn("no validation split; validating on the test split");
            val = test.clone();
        }
    }

    let active = cfg.alpha.first_active_epoch().filter(|&e| e < cfg.epochs);
    if active.is_some() && pool.is_empty() {
        log.warn("unlabeled pool is empty; training is supervised only");
    }
    let augment_cfg = match (cfg.augment, task) {
        (false, _) => AugmentConfig::none(),
        (true, Task::Classification) => AugmentConfig::classification(),
        (true, Task::Segmentation) => AugmentConfig::segmentation(),
    };
    let lr_schedule = StepLr::new(cfg.lr, cfg.lr_milestones.clone(), cfg.lr_gamma)?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.lr, cfg.momentum)?;
    let mut switched = false;

    let regenerate = |model: &M, next_epoch: usize, produced_by: Option<usize>| {
        let idx = subsample_unlabeled(pool.len(), cfg.unlabeled_ratio, cfg.seed, next_epoch);
        let subset: Vec<&Sample<T>> = idx.iter().map(|&i| pool[i]).collect();
        generate_pseudo_labels(model, &subset, bs, produced_by)
    };
    let mut store = PseudoLabelStore::default();
    let mut supervised_model = None;
    if cfg.alpha.alpha_at(0) > 0.0 && !pool.is_empty() {
        store = regenerate(&model, 0, None)?;
    }

    let mut best: Option<(f64, usize, M)> = None;
    let mut confusion = ConfusionMatrix::new(data.n_classes);
    for epoch in 0..cfg.epochs {
        let alpha = cfg.alpha.alpha_at(epoch);
        if alpha > 0.0 && cfg.switch_optimizer && !switched {
            opt = Optimizer::new(cfg.pseudo_optimizer, cfg.pseudo_lr, cfg.momentum)?;
            switched = true;
        }
        if !switched {
            opt.set_lr(lr_schedule.lr_at(epoch))?;
        }

        let mut pseudo: Vec<Sample<T>> = Vec::new();
        if alpha > 0.0 {
            for s in &pool {
                match store.get(&s.id) {
                    Some(PseudoLabel::Class(c)) => pseudo.push(Sample::with_label(s.id.clone(), s.split, s.image.clone(), *c)),
                    Some(PseudoLabel::Mask(m)) => pseudo.push(Sample::with_mask(s.id.clone(), s.split, s.image.clone(), m.clone())),
                    None => {}
                }
            }
            pseudo.shuffle(&mut rng_for(cfg.seed, stream::PSEUDO_ORDER, epoch as u64));
        }
        let pseudo_steps = pseudo.len().div_ceil(bs);
        let steps = labeled.len().div_ceil(bs).max(pseudo_steps);

        let mut aug_rng = rng_for(cfg.seed, stream::AUGMENT, epoch as u64);
        let (mut sup_losses, mut pseudo_losses, mut totals) = (Vec::new(), Vec::new(), Vec::new());
        for step in 0..steps {
            let lab_batch: Vec<Sample<T>> = source
                .next_batch(bs)
                .into_iter()
                .map(|i| augment(labeled[i], &augment_cfg, &mut aug_rng))
                .collect();
            let sup = batch_loss(&model, task, data.n_classes, &cfg.loss, &lab_batch)?;
            let pseudo_term = if step < pseudo_steps {
                let chunk = &pseudo[step * bs..((step + 1) * bs).min(pseudo.len())];
                let batch: Vec<Sample<T>> = chunk.iter().map(|s| augment(s, &augment_cfg, &mut aug_rng)).collect();
                Some(batch_loss(&model, task, data.n_classes, &cfg.loss, &batch)?)
            } else {
                None
            };
            let total = semi_supervised_loss(&sup, pseudo_term.as_ref(), T::of(alpha))?;
            let record = StepLoss {
                epoch,
                step,
                alpha,
                sup: sup.item()?.as_f64(),
                pseudo: pseudo_term.as_ref().map(|p| p.item().map(|v| v.as_f64())).transpose()?,
                total: total.item()?.as_f64(),
            };
            if !record.total.is_finite() {
                return Err(Error::Divergence { epoch, step });
            }
            total.backward()?;
            opt.step(model.parameters_mut())?;
            sup_losses.push(record.sup);
            pseudo_losses.extend(record.pseudo);
            totals.push(record.total);
            log.steps.push(record);
        }

        if cfg.alpha.alpha_at(epoch + 1) > 0.0 && !pool.is_empty() {
            if alpha == 0.0 {
                supervised_model = Some(model.clone());
            }
            store = regenerate(&model, epoch + 1, Some(epoch))?;
        }

        let (metrics, cm) = evaluate(&model, &val, cfg.positive_class, bs)?;
        let score = metrics.score();
        if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
            best = Some((score, epoch, model.clone()));
        }
        confusion = cm;
        log.records.push(EpochRecord {
            epoch,
            alpha,
            lr: opt.lr(),
            optimizer: opt.kind(),
            sup_loss: mean(&sup_losses),
            pseudo_loss: mean(&pseudo_losses),
            total_loss: mean(&totals),
            n_pseudo: pseudo.len(),
            metrics,
        });
        ::log::info!("epoch {epoch}: alpha {alpha} loss {} score {score}", mean(&totals));
    }

    let (_, best_epoch, best_model) = best.ok_or_else(|| Error::config("epochs", "must be positive"))?;
    let test = if test.is_empty() {
        None
    } else {
        let eval = |m: &M| evaluate(m, &test, cfg.positive_class, bs);
        Some(TestMetrics {
            final_model: eval(&model)?,
            best_model: eval(&best_model)?,
            supervised_model: supervised_model.as_ref().map(eval).transpose()?,
        })
    };
    Ok(TrainOutcome {
        model,
        best_model,
        best_epoch,
        supervised_model,
        log,
        confusion,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{gen_classification_splits, gen_segmentation_splits, ClassificationSpec, SegmentationSpec};
    use crate::optim::OptimizerKind;

    fn cls_data(n_unlabeled: usize) -> Dataset<f64> {
        gen_classification_splits(&ClassificationSpec {
            n_labeled: 12,
            n_unlabeled,
            n_val: 6,
            n_test: 4,
            positive_fraction: 0.5,
            image_size: 8,
            seed: 1,
        })
        .unwrap()
    }

    fn seg_data(n_unlabeled: usize) -> Dataset<f64> {
        gen_segmentation_splits(&SegmentationSpec {
            n_labeled: 6,
            n_unlabeled,
            n_val: 3,
            n_test: 0,
            n_classes: 3,
            image_size: 8,
            seed: 2,
        })
        .unwrap()
    }

    fn cls_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Task::Classification);
        cfg.epochs = 6;
        cfg.alpha = AlphaSchedule::new(0.0, 1.0, 1, 4).unwrap();
        cfg.batch_size = 4;
        cfg.base_width = 2;
        cfg.image_size = 8;
        cfg
    }

    fn seg_cfg() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Task::Segmentation);
        cfg.epochs = 5;
        cfg.alpha = AlphaSchedule::new(0.0, 1.0, 1, 3).unwrap();
        cfg.batch_size = 3;
        cfg.base_width = 2;
        cfg.image_size = 8;
        cfg.n_classes = 3;
        cfg.lr_milestones = vec![1];
        cfg
    }

    #[test]
    fn binary_logits_threshold_at_zero() {
        let z = Tensor::new(&[3, 1], vec![2.0, -2.0, 0.0]).unwrap();
        let labels = labels_from_logits(ModelKind::Classifier, &z).unwrap();
        assert_eq!(labels, vec![PseudoLabel::Class(1), PseudoLabel::Class(0), PseudoLabel::Class(0)]);
    }

    #[test]
    fn segmentation_logits_argmax_with_low_tie_break() {
        // channel 3 largest everywhere, except pixel 0 where 2 and 5 tie
        let (c, hw) = (6, 4);
        let mut data = vec![0.0; c * hw];
        for p in 0..hw {
            data[3 * hw + p] = 1.0;
        }
        data[3 * hw] = 0.0;
        data[2 * hw] = 2.0;
        data[5 * hw] = 2.0;
        let z = Tensor::new(&[1, c, 2, 2], data).unwrap();
        let labels = labels_from_logits(ModelKind::Segmenter, &z).unwrap();
        assert_eq!(labels, vec![PseudoLabel::Mask(Mask::new(2, 2, vec![2, 3, 3, 3]).unwrap())]);
    }

    #[test]
    fn pseudo_generation_rejects_labeled_samples() {
        let data = cls_data(3);
        let model = ClassifierModel::<f64>::new(model_config(&cls_cfg(), &data)).unwrap();
        let unl: Vec<&Sample<f64>> = data.samples.iter().filter(|s| !s.labeled).collect();
        let store = generate_pseudo_labels(&model, &unl, 2, Some(4)).unwrap();
        assert_eq!(store.len(), 3);
        assert_eq!(store.epoch, Some(4));
        assert!(store.labels.keys().all(|id| id.starts_with("unl")));
        let lab: Vec<&Sample<f64>> = data.samples.iter().filter(|s| s.labeled).collect();
        assert!(generate_pseudo_labels(&model, &lab, 2, None).is_err());
    }

    #[test]
    fn evaluation_is_repeatable_and_needs_labels() {
        let data = cls_data(3);
        let model = ClassifierModel::<f64>::new(model_config(&cls_cfg(), &data)).unwrap();
        let val = data.split(Split::Val);
        assert_eq!(evaluate(&model, &val, 1, 4).unwrap(), evaluate(&model, &val, 1, 2).unwrap());
        let (_, cm) = evaluate(&model, &val, 1, 4).unwrap();
        assert_eq!(cm.total(), 6);
        assert!(evaluate(&model, &data.split(Split::Train), 1, 4).is_err());
    }

    #[test]
    fn classification_log_and_composite_loss() {
        let cfg = cls_cfg();
        let out = train_classification(&cfg, &cls_data(20)).unwrap();
        let log = &out.log;
        assert_eq!(log.records.len(), cfg.epochs);
        assert!(log.records.windows(2).all(|w| w[0].epoch + 1 == w[1].epoch));
        for s in &log.steps {
            let expected = s.sup + s.alpha * s.pseudo.unwrap_or(0.0);
            assert!((s.total - expected).abs() < 1e-12, "{s:?}");
            if s.alpha == 0.0 {
                assert!(s.pseudo.is_none());
            }
        }
        // 20 unlabeled at 1:10 gives 2 pseudo samples once alpha is positive
        let n_pseudo: Vec<usize> = log.records.iter().map(|r| r.n_pseudo).collect();
        assert_eq!(n_pseudo, vec![0, 0, 2, 2, 2, 2]);
        assert!(out.supervised_model.is_some());
        assert!(out.test.is_some());
        assert!(log.records.iter().all(|r| r.optimizer == OptimizerKind::Sgd));
    }

    #[test]
    fn zero_alpha_matches_supervised_only_run() {
        let mut cfg = cls_cfg();
        cfg.alpha = AlphaSchedule::disabled();
        let data = cls_data(20);
        let ssl = train_classification(&cfg, &data).unwrap();
        let sup = train_classification(&cfg, &data.without_unlabeled()).unwrap();
        assert_eq!(ssl.log.loss_trace(), sup.log.loss_trace());
        assert_eq!(ssl.log.to_csv(), sup.log.to_csv());
        assert!(ssl.supervised_model.is_none());
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = cls_cfg();
        let a = train_classification(&cfg, &cls_data(20)).unwrap();
        let b = train_classification(&cfg, &cls_data(20)).unwrap();
        assert_eq!(a.log.to_csv(), b.log.to_csv());
        assert_eq!(a.log.loss_trace(), b.log.loss_trace());
    }

    #[test]
    fn empty_pool_degrades_with_warning() {
        let out = train_classification(&cls_cfg(), &cls_data(0)).unwrap();
        assert!(out.log.warnings.iter().any(|w| w.contains("unlabeled pool is empty")));
        assert!(out.log.steps.iter().all(|s| s.pseudo.is_none()));
    }

    #[test]
    fn missing_class_is_a_sampler_error() {
        let data = cls_data(0);
        let samples = data
            .samples
            .iter()
            .filter(|s| s.split != Split::Train || s.label == Some(0))
            .cloned()
            .collect();
        let one_class = Dataset::new(Task::Classification, 2, samples).unwrap();
        assert!(matches!(train_classification(&cls_cfg(), &one_class), Err(Error::Sampler(_))));
    }

    #[test]
    fn segmentation_switches_to_sgd_when_pseudo_masks_start() {
        let cfg = seg_cfg();
        let out = train_segmentation(&cfg, &seg_data(20)).unwrap();
        let kinds: Vec<(OptimizerKind, f64)> = out.log.records.iter().map(|r| (r.optimizer, r.lr)).collect();
        assert_eq!(
            kinds,
            vec![
                (OptimizerKind::Adam, 0.01),
                (OptimizerKind::Adam, 0.001),
                (OptimizerKind::Sgd, 0.01),
                (OptimizerKind::Sgd, 0.01),
                (OptimizerKind::Sgd, 0.01),
            ]
        );
        assert!(matches!(out.log.records[0].metrics, Metrics::Segmentation(_)));
        let n_pseudo: Vec<usize> = out.log.records.iter().map(|r| r.n_pseudo).collect();
        assert_eq!(n_pseudo, vec![0, 0, 2, 2, 2]);
    }

    #[test]
    fn segmentation_zero_alpha_matches_supervised_only_run() {
        let mut cfg = seg_cfg();
        cfg.alpha = AlphaSchedule::disabled();
        let data = seg_data(10);
        let ssl = train_segmentation(&cfg, &data).unwrap();
        let sup = train_segmentation(&cfg, &data.without_unlabeled()).unwrap();
        assert_eq!(ssl.log.loss_trace(), sup.log.loss_trace());
        assert!(ssl.log.records.iter().all(|r| r.optimizer == OptimizerKind::Adam));
    }

    #[test]
    fn divergence_is_reported() {
        let mut data = cls_data(0);
        data.samples[0].image.data[0] = f64::NAN;
        match train_classification(&cls_cfg(), &data) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {:?}", other.map(|o| o.log.loss_trace())),
        }
    }

    #[test]
    fn task_mismatch_is_a_config_error() {
        assert!(matches!(train_segmentation(&seg_cfg(), &cls_data(0)), Err(Error::Config { .. })));
    }
}

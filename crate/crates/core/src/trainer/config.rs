//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use super::AlphaSchedule;
use crate::data::Task;
use crate::error::{Error, Result};
use crate::losses::LossWeights;
use crate::optim::OptimizerKind;

/// Everything needed to reproduce a run besides the dataset files.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub epochs: usize,
    pub alpha: AlphaSchedule,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub lr: f64,
    pub momentum: f64,
    pub lr_milestones: Vec<usize>,
    pub lr_gamma: f64,
    /// Replace the optimizer with a fresh `pseudo_optimizer` at the first
    /// epoch with a positive pseudo-label weight.
    pub switch_optimizer: bool,
    pub pseudo_optimizer: OptimizerKind,
    pub pseudo_lr: f64,
    pub loss: LossWeights,
    /// One in `unlabeled_ratio` unlabeled samples is pseudo-labeled per epoch.
    pub unlabeled_ratio: usize,
    pub seed: u64,
    pub base_width: usize,
    pub n_classes: usize,
    pub image_size: usize,
    pub augment: bool,
    pub preprocess: bool,
    pub balanced_sampling: bool,
    pub positive_class: usize,
    /// Dataset manifest; when absent a synthetic dataset is generated.
    pub manifest: Option<PathBuf>,
    pub gen_labeled: usize,
    pub gen_unlabeled: usize,
    pub gen_val: usize,
    pub gen_test: usize,
    pub positive_fraction: f64,
    pub outdir: PathBuf,
}

/// Keys in the order they are written back out.
pub const KEYS: [&str; 33] = [
    "task",
    "epochs",
    "alpha_i",
    "alpha_f",
    "e_i",
    "e_f",
    "batch_size",
    "optimizer",
    "lr",
    "momentum",
    "lr_milestones",
    "lr_gamma",
    "switch_optimizer",
    "pseudo_optimizer",
    "pseudo_lr",
    "w_bce",
    "w_dice",
    "dice_smooth",
    "unlabeled_ratio",
    "seed",
    "base_width",
    "n_classes",
    "image_size",
    "augment",
    "preprocess",
    "balanced_sampling",
    "positive_class",
    "manifest",
    "gen_labeled",
    "gen_unlabeled",
    "gen_val",
    "gen_test",
    "positive_fraction",
];

impl ExperimentConfig {
    /// Classification: 0→1 ramp over epochs 10..135 of 150, batch 64, SGD.
    /// Segmentation: batch 24, Adam with step decay at 10/30/50, then
    /// SGD at 0.01 once pseudo masks are in use.
    pub fn defaults(task: Task) -> Self {
        let base = ExperimentConfig {
            task,
            epochs: 150,
            alpha: AlphaSchedule::default(),
            batch_size: 64,
            optimizer: OptimizerKind::Sgd,
            lr: 0.01,
            momentum: 0.9,
            lr_milestones: Vec::new(),
            lr_gamma: 0.1,
            switch_optimizer: false,
            pseudo_optimizer: OptimizerKind::Sgd,
            pseudo_lr: 0.01,
            loss: LossWeights::default(),
            unlabeled_ratio: 10,
            seed: 0,
            base_width: 8,
            n_classes: 2,
            image_size: 32,
            augment: true,
            preprocess: false,
            balanced_sampling: true,
            positive_class: 1,
            manifest: None,
            gen_labeled: 398,
            gen_unlabeled: 1047,
            gen_val: 100,
            gen_test: 100,
            positive_fraction: 51.0 / 398.0,
            outdir: PathBuf::from("runs"),
        };
        match task {
            Task::Classification => base,
            Task::Segmentation => ExperimentConfig {
                batch_size: 24,
                optimizer: OptimizerKind::Adam,
                lr_milestones: vec![10, 30, 50],
                switch_optimizer: true,
                n_classes: 10,
                preprocess: true,
                balanced_sampling: false,
                ..base
            },
        }
    }

    /// Parses `text`, then applies `overrides` in order. The task comes from
    /// the `task` key if present, otherwise from `task_hint`.
    pub fn parse(text: &str, overrides: &[(String, String)], task_hint: Option<Task>) -> Result<Self> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(line, format!("line {}: expected `key = value`", n + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        pairs.extend(overrides.iter().map(|(k, v)| (k.trim().to_string(), v.trim().to_string())));

        let task = match pairs.iter().rev().find(|(k, _)| k == "task") {
            Some((_, v)) => {
                let t = parse_value::<Task>("task", v)?;
                if let Some(hint) = task_hint.filter(|&h| h != t) {
                    return Err(Error::config("task", format!("config says {t}, command expects {hint}")));
                }
                t
            }
            None => task_hint.ok_or_else(|| Error::config("task", "missing"))?,
        };
        let mut cfg = Self::defaults(task);
        for (k, v) in &pairs {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value. Does not re-validate.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task" => self.task = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "alpha_i" => self.alpha.alpha_i = parse_value(key, value)?,
            "alpha_f" => self.alpha.alpha_f = parse_value(key, value)?,
            "e_i" => self.alpha.e_i = parse_value(key, value)?,
            "e_f" => self.alpha.e_f = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "optimizer" => self.optimizer = parse_value(key, value)?,
            "lr" => self.lr = parse_value(key, value)?,
            "momentum" => self.momentum = parse_value(key, value)?,
            "lr_milestones" => {
                self.lr_milestones = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_value(key, s))
                    .collect::<Result<_>>()?
            }
            "lr_gamma" => self.lr_gamma = parse_value(key, value)?,
            "switch_optimizer" => self.switch_optimizer = parse_value(key, value)?,
            "pseudo_optimizer" => self.pseudo_optimizer = parse_value(key, value)?,
            "pseudo_lr" => self.pseudo_lr = parse_value(key, value)?,
            "w_bce" => self.loss.bce = parse_value(key, value)?,
            "w_dice" => self.loss.dice = parse_value(key, value)?,
            "dice_smooth" => self.loss.dice_smooth = parse_value(key, value)?,
            "unlabeled_ratio" => self.unlabeled_ratio = parse_value(key, value)?,
            "seed" => self.seed = parse_value(key, value)?,
            "base_width" => self.base_width = parse_value(key, value)?,
            "n_classes" => self.n_classes = parse_value(key, value)?,
            "image_size" => self.image_size = parse_value(key, value)?,
            "augment" => self.augment = parse_value(key, value)?,
            "preprocess" => self.preprocess = parse_value(key, value)?,
            "balanced_sampling" => self.balanced_sampling = parse_value(key, value)?,
            "positive_class" => self.positive_class = parse_value(key, value)?,
            "manifest" => self.manifest = (!value.is_empty()).then(|| PathBuf::from(value)),
            "gen_labeled" => self.gen_labeled = parse_value(key, value)?,
            "gen_unlabeled" => self.gen_unlabeled = parse_value(key, value)?,
            "gen_val" => self.gen_val = parse_value(key, value)?,
            "gen_test" => self.gen_test = parse_value(key, value)?,
            "positive_fraction" => self.positive_fraction = parse_value(key, value)?,
            "outdir" => self.outdir = PathBuf::from(value),
            _ => return Err(Error::config(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: &str| Err(Error::config(key, msg));
        if self.epochs == 0 {
            return fail("epochs", "must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch_size", "must be positive");
        }
        self.alpha.validate()?;
        for (key, lr) in [("lr", self.lr), ("pseudo_lr", self.pseudo_lr)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return fail(key, "must be a positive finite number");
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum", "must be in [0, 1)");
        }
        if self.lr_milestones.windows(2).any(|w| w[0] >= w[1]) {
            return fail("lr_milestones", "must be strictly ascending");
        }
        if !(self.lr_gamma > 0.0 && self.lr_gamma <= 1.0) {
            return fail("lr_gamma", "must be in (0, 1]");
        }
        self.loss
            .validate()
            .map_err(|e| Error::config("w_bce", e.to_string()))?;
        if self.unlabeled_ratio == 0 {
            return fail("unlabeled_ratio", "must be positive");
        }
        if self.base_width == 0 {
            return fail("base_width", "must be positive");
        }
        match self.task {
            Task::Classification if self.n_classes != 2 => return fail("n_classes", "classification is binary"),
            Task::Segmentation if !(2..=256).contains(&self.n_classes) => {
                return fail("n_classes", "must be in 2..=256")
            }
            _ => {}
        }
        if self.image_size < 4 || self.image_size % 4 != 0 {
            return fail("image_size", "must be a positive multiple of 4");
        }
        if self.positive_class >= self.n_classes {
            return fail("positive_class", "out of range");
        }
        if !(self.positive_fraction > 0.0 && self.positive_fraction < 1.0) {
            return fail("positive_fraction", "must be in (0, 1)");
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let join = |v: &[usize]| v.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",");
        match key {
            "task" => match self.task {
                Task::Classification => "classification".into(),
                Task::Segmentation => "segmentation".into(),
            },
            "epochs" => self.epochs.to_string(),
            "alpha_i" => self.alpha.alpha_i.to_string(),
            "alpha_f" => self.alpha.alpha_f.to_string(),
            "e_i" => self.alpha.e_i.to_string(),
            "e_f" => self.alpha.e_f.to_string(),
            "batch_size" => self.batch_size.to_string(),
            "optimizer" => self.optimizer.to_string(),
            "lr" => self.lr.to_string(),
            "momentum" => self.momentum.to_string(),
            "lr_milestones" => join(&self.lr_milestones),
            "lr_gamma" => self.lr_gamma.to_string(),
            "switch_optimizer" => self.switch_optimizer.to_string(),
            "pseudo_optimizer" => self.pseudo_optimizer.to_string(),
            "pseudo_lr" => self.pseudo_lr.to_string(),
            "w_bce" => self.loss.bce.to_string(),
            "w_dice" => self.loss.dice.to_string(),
            "dice_smooth" => self.loss.dice_smooth.to_string(),
            "unlabeled_ratio" => self.unlabeled_ratio.to_string(),
            "seed" => self.seed.to_string(),
            "base_width" => self.base_width.to_string(),
            "n_classes" => self.n_classes.to_string(),
            "image_size" => self.image_size.to_string(),
            "augment" => self.augment.to_string(),
            "preprocess" => self.preprocess.to_string(),
            "balanced_sampling" => self.balanced_sampling.to_string(),
            "positive_class" => self.positive_class.to_string(),
            "manifest" => self
                .manifest
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "gen_labeled" => self.gen_labeled.to_string(),
            "gen_unlabeled" => self.gen_unlabeled.to_string(),
            "gen_val" => self.gen_val.to_string(),
            "gen_test" => self.gen_test.to_string(),
            "positive_fraction" => self.positive_fraction.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Every key with its resolved value; `parse` of the result gives back
    /// the same config (the output directory is not included).
    pub fn to_cfg_string(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.value_of(key));
        }
        out
    }

    /// Key/value echo for machine-readable summaries.
    pub fn to_map(&self) -> BTreeMap<String, String> {
        KEYS.iter().map(|k| (k.to_string(), self.value_of(k))).collect()
    }
}

fn parse_value<V: FromStr>(key: &str, value: &str) -> Result<V> {
    value
        .parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_classification_defaults() {
        let cfg = ExperimentConfig::parse("", &[], Some(Task::Classification)).unwrap();
        assert_eq!(cfg, ExperimentConfig::defaults(Task::Classification));
        assert_eq!(cfg.alpha, AlphaSchedule::new(0.0, 1.0, 10, 135).unwrap());
        assert_eq!(cfg.batch_size, 64);
        assert_eq!(cfg.optimizer, OptimizerKind::Sgd);
    }

    #[test]
    fn segmentation_defaults() {
        let cfg = ExperimentConfig::parse("task = segmentation\n", &[], None).unwrap();
        assert_eq!(cfg.batch_size, 24);
        assert_eq!(cfg.optimizer, OptimizerKind::Adam);
        assert_eq!(cfg.lr_milestones, vec![10, 30, 50]);
        assert_eq!(cfg.lr_gamma, 0.1);
        assert_eq!((cfg.loss.bce, cfg.loss.dice), (0.5, 0.5));
        assert_eq!((cfg.pseudo_optimizer, cfg.pseudo_lr), (OptimizerKind::Sgd, 0.01));
        assert_eq!(cfg.unlabeled_ratio, 10);
        assert!(cfg.switch_optimizer);
    }

    #[test]
    fn overrides_win() {
        let over = vec![("alpha_f".to_string(), "0".to_string())];
        let cfg = ExperimentConfig::parse("alpha_f = 0.7\n", &over, Some(Task::Classification)).unwrap();
        assert_eq!(cfg.alpha.alpha_f, 0.0);
    }

    #[test]
    fn errors_name_the_key() {
        let err = |text: &str| match ExperimentConfig::parse(text, &[], Some(Task::Classification)) {
            Err(Error::Config { key, msg }) => (key, msg),
            other => panic!("expected config error, got {other:?}"),
        };
        let (key, msg) = err("e_i = 135\ne_f = 10");
        assert_eq!(key, "e_i");
        assert!(msg.contains("e_i < e_f violated"));
        assert_eq!(err("colour = red").0, "colour");
        assert_eq!(err("epochs = many").0, "epochs");
        assert_eq!(err("epochs = 0").0, "epochs");
        assert_eq!(err("task = segmentation").0, "task");
        assert_eq!(err("just words").1, "line 1: expected `key = value`");
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "task = seg\nlr_milestones = 3, 7\nalpha_f = 0.3\nmanifest = data/m.csv # comment\n";
        let cfg = ExperimentConfig::parse(text, &[], None).unwrap();
        assert_eq!(cfg.manifest, Some(PathBuf::from("data/m.csv")));
        let again = ExperimentConfig::parse(&cfg.to_cfg_string(), &[], None).unwrap();
        assert_eq!(again, cfg);
        let cls = ExperimentConfig::defaults(Task::Classification);
        assert_eq!(ExperimentConfig::parse(&cls.to_cfg_string(), &[], None).unwrap(), cls);
    }
}

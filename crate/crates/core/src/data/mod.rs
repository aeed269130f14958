//! Samples, datasets, image files, manifests, synthetic generators and
//! batch samplers.

mod manifest;
mod pnm;
mod sampler;
mod synthetic;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::scalar::Scalar;

pub use manifest::{load_manifest, write_manifest};
pub use pnm::{decode_pnm, encode_pnm, read_image, read_mask, write_image, write_mask, Pnm};
pub use sampler::{subsample_unlabeled, ShuffleCycler, WeightedSampler};
pub use synthetic::{
    gen_classification_splits, gen_segmentation_splits, gen_synthetic_classification,
    gen_synthetic_segmentation, ClassificationSpec, SegmentationSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::InvalidArgument(format!("unknown split `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Classification,
    Segmentation,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classification => "classification",
            Task::Segmentation => "segmentation",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classification" | "cls" => Ok(Task::Classification),
            "segmentation" | "seg" => Ok(Task::Segmentation),
            _ => Err(Error::InvalidArgument(format!("unknown task `{s}`"))),
        }
    }
}

/// One image with an optional class label or class mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub id: String,
    pub split: Split,
    pub image: Image<T>,
    pub label: Option<usize>,
    pub mask: Option<Mask>,
    pub labeled: bool,
}

impl<T: Scalar> Sample<T> {
    pub fn with_label(id: impl Into<String>, split: Split, image: Image<T>, label: usize) -> Self {
        Sample {
            id: id.into(),
            split,
            image,
            label: Some(label),
            mask: None,
            labeled: true,
        }
    }

    pub fn with_mask(id: impl Into<String>, split: Split, image: Image<T>, mask: Mask) -> Self {
        Sample {
            id: id.into(),
            split,
            image,
            label: None,
            mask: Some(mask),
            labeled: true,
        }
    }

    pub fn unlabeled(id: impl Into<String>, split: Split, image: Image<T>) -> Self {
        Sample {
            id: id.into(),
            split,
            image,
            label: None,
            mask: None,
            labeled: false,
        }
    }

    pub fn validate(&self, task: Task, n_classes: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("sample `{}`: {msg}", self.id)));
        if self.labeled != (self.label.is_some() || self.mask.is_some()) {
            return bad("labeled flag disagrees with the presence of a label or mask".into());
        }
        if self.labeled {
            match task {
                Task::Classification if self.label.is_none() => return bad("missing class label".into()),
                Task::Segmentation if self.mask.is_none() => return bad("missing mask".into()),
                _ => {}
            }
        }
        if let Some(l) = self.label {
            if l >= n_classes {
                return bad(format!("label {l} out of range for {n_classes} classes"));
            }
        }
        if let Some(m) = &self.mask {
            if (m.height, m.width) != (self.image.height, self.image.width) {
                return bad(format!(
                    "mask {}x{} does not match image {}x{}",
                    m.height, m.width, self.image.height, self.image.width
                ));
            }
            if m.max_class() as usize >= n_classes {
                return bad(format!("mask value {} out of range", m.max_class()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub task: Task,
    pub n_classes: usize,
    pub samples: Vec<Sample<T>>,
}

impl<T: Scalar> Dataset<T> {
    /// Validates every sample, id uniqueness, and that val/test samples are labeled.
    pub fn new(task: Task, n_classes: usize, samples: Vec<Sample<T>>) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {n_classes}")));
        }
        let mut seen = HashSet::new();
        for s in &samples {
            s.validate(task, n_classes)?;
            if !seen.insert(s.id.as_str()) {
                return Err(Error::InvalidArgument(format!("duplicate sample id `{}`", s.id)));
            }
            if s.split != Split::Train && !s.labeled {
                return Err(Error::InvalidArgument(format!(
                    "sample `{}` in split {} is unlabeled",
                    s.id, s.split
                )));
            }
        }
        Ok(Dataset {
            task,
            n_classes,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn filtered(&self, keep: impl Fn(&Sample<T>) -> bool) -> Self {
        Dataset {
            task: self.task,
            n_classes: self.n_classes,
            samples: self.samples.iter().filter(|s| keep(s)).cloned().collect(),
        }
    }

    pub fn split(&self, split: Split) -> Self {
        self.filtered(|s| s.split == split)
    }

    pub fn labeled(&self) -> Self {
        self.filtered(|s| s.labeled)
    }

    pub fn unlabeled(&self) -> Self {
        self.filtered(|s| !s.labeled)
    }

    /// The dataset with every unlabeled sample removed.
    pub fn without_unlabeled(&self) -> Self {
        self.labeled()
    }

    /// Class labels of a classification dataset (unlabeled samples skipped).
    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().filter_map(|s| s.label).collect()
    }

    /// Applies `f` to every image.
    pub fn map_images(&self, f: impl Fn(&Image<T>) -> Result<Image<T>>) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| {
                Ok(Sample {
                    image: f(&s.image)?,
                    ..s.clone()
                })
            })
            .collect::<Result<_>>()?;
        Ok(Dataset { samples, ..self.clone() })
    }

    /// Merges disjoint datasets of the same task.
    pub fn concat(parts: Vec<Self>) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("nothing to concatenate".into()))?;
        let (task, n_classes) = (first.task, first.n_classes);
        let samples = parts.into_iter().flat_map(|d| d.samples).collect();
        Self::new(task, n_classes, samples)
    }
}

//! Desk-scale networks: a residual CNN with a one-logit head and a two-level
//! UNet-style segmenter. Both produce raw logits; sigmoid/softmax are applied
//! by the losses and by prediction code.

mod checkpoint;
mod classifier;
mod unet;

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, Checkpoint};
pub use classifier::ClassifierModel;
pub use unet::SegmenterModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Classifier,
    Segmenter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub in_channels: usize,
    pub n_classes: usize,
    pub base_width: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            in_channels: 3,
            n_classes: 2,
            base_width: 8,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if self.base_width == 0 {
            return Err(Error::InvalidArgument("base width must be at least 1".into()));
        }
        if self.in_channels == 0 {
            return Err(Error::InvalidArgument("input channels must be at least 1".into()));
        }
        match kind {
            ModelKind::Classifier if self.n_classes != 2 => Err(Error::InvalidArgument(format!(
                "classifier is binary, got n_classes = {}",
                self.n_classes
            ))),
            ModelKind::Segmenter if self.n_classes < 2 => Err(Error::InvalidArgument(format!(
                "segmenter needs at least 2 classes, got {}",
                self.n_classes
            ))),
            _ => Ok(()),
        }
    }
}

/// Common surface of the trainable networks.
pub trait Model<T: Scalar>: Clone {
    fn kind(&self) -> ModelKind;

    fn config(&self) -> &ModelConfig;

    /// Logits for an N×C×H×W batch.
    fn forward(&self, batch: &Tensor<T>) -> Result<Tensor<T>>;

    /// Parameters in declaration order.
    fn parameters(&self) -> Vec<&Tensor<T>>;

    fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>>;

    fn num_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.numel()).sum()
    }
}

/// Convolution weights plus bias.
#[derive(Debug, Clone)]
pub(crate) struct Conv<T: Scalar> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    pub pad: usize,
}

impl<T: Scalar> Conv<T> {
    /// He-style scaled uniform weights in ±sqrt(6 / fan_in), zero bias.
    pub fn init<R: Rng>(rng: &mut R, c_in: usize, c_out: usize, k: usize) -> Result<Self> {
        Ok(Conv {
            weight: he_uniform(rng, &[c_out, c_in, k, k], c_in * k * k)?,
            bias: Tensor::parameter(&[c_out], vec![T::zero(); c_out])?,
            pad: k / 2,
        })
    }

    pub fn forward(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        x.conv2d(&self.weight, &self.bias, 1, self.pad)
    }
}

pub(crate) fn he_uniform<T: Scalar, R: Rng>(
    rng: &mut R,
    shape: &[usize],
    fan_in: usize,
) -> Result<Tensor<T>> {
    let bound = (6.0 / fan_in as f64).sqrt();
    let n = shape.iter().product();
    let data = (0..n).map(|_| T::of(rng.gen_range(-bound..bound))).collect();
    Tensor::parameter(shape, data)
}

/// Checks an N×C×H×W batch against the expected channel count and the
/// divisible-by-4 spatial contract.
pub(crate) fn check_batch<T: Scalar>(batch: &Tensor<T>, channels: usize) -> Result<()> {
    match *batch.shape() {
        [_, c, h, w] if c == channels && h % 4 == 0 && w % 4 == 0 => Ok(()),
        ref s => Err(Error::Shape(format!(
            "model expects N×{channels}×H×W with H, W divisible by 4, got {s:?}"
        ))),
    }
}

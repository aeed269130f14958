//! Semi-supervised pseudo-label training for image classification and
//! semantic segmentation.
//!
//! The numeric core ([`tensor`], [`nn`], [`losses`], [`optim`],
//! [`preprocess`], [`trainer`]) is generic over the element type through
//! [`Scalar`]; the aliases below fix it to `f64`, which is what the command
//! line runner and the gradient checks use.

pub mod data;
pub mod error;
pub mod image;
pub mod losses;
pub mod metrics;
pub mod nn;
pub mod optim;
pub mod preprocess;
pub mod scalar;
pub mod seeds;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor = tensor::Tensor<f64>;
pub type Tensor32 = tensor::Tensor<f32>;
pub type Classifier = nn::ClassifierModel<f64>;
pub type Segmenter = nn::SegmenterModel<f64>;

//! Image pipeline: edge-preserving smoothing, morphology, resizing,
//! augmentation and one-hot mask encoding.

mod augment;
mod filter;
mod morph;
mod resize;

pub use augment::{augment, augment_pair, AugmentConfig};
pub use filter::bilateral_filter;
pub use morph::{dilate, erode, morph, MorphKind};
pub use resize::{resize, resize_mask, Interpolation};

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::scalar::Scalar;

/// Channel `c` is the indicator of class `c`.
pub fn one_hot<T: Scalar>(mask: &Mask, n_classes: usize) -> Result<Image<T>> {
    if let Some(bad) = mask.data.iter().find(|&&v| v as usize >= n_classes) {
        return Err(Error::InvalidArgument(format!(
            "mask value {bad} out of range for {n_classes} classes"
        )));
    }
    let hw = mask.height * mask.width;
    let mut out = Image::filled(n_classes, mask.height, mask.width, T::zero());
    for (p, c) in mask.indices().enumerate() {
        out.data[c * hw + p] = T::one();
    }
    Ok(out)
}

/// Per-pixel index of the largest channel; ties go to the lowest index.
pub fn argmax_channels<T: Scalar>(img: &Image<T>) -> Mask {
    let hw = img.height * img.width;
    let data = (0..hw)
        .map(|p| {
            let mut best = 0;
            for c in 1..img.channels {
                if img.data[c * hw + p] > img.data[best * hw + p] {
                    best = c;
                }
            }
            best as u8
        })
        .collect();
    Mask {
        height: img.height,
        width: img.width,
        data,
    }
}

/// Smoothing and closing applied to input images before training:
/// bilateral filter, `dilations` × dilate, `erosions` × erode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterPipeline {
    pub diameter: usize,
    pub sigma_color: f64,
    pub sigma_space: f64,
    pub dilations: usize,
    pub erosions: usize,
}

impl Default for FilterPipeline {
    fn default() -> Self {
        FilterPipeline {
            diameter: 5,
            sigma_color: 0.1,
            sigma_space: 2.0,
            dilations: 2,
            erosions: 1,
        }
    }
}

impl FilterPipeline {
    pub fn apply<T: Scalar>(&self, img: &Image<T>) -> Result<Image<T>> {
        let mut out = bilateral_filter(img, self.diameter, self.sigma_color, self.sigma_space)?;
        if self.dilations > 0 {
            out = dilate(&out, self.dilations)?;
        }
        if self.erosions > 0 {
            out = erode(&out, self.erosions)?;
        }
        Ok(out)
    }
}

//! Plain (non-differentiable) image and class-mask containers.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// C×H×W values, row-major per channel plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Image<T> {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Image<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!("empty image {channels}x{height}x{width}")));
        }
        if data.len() != channels * height * width {
            return Err(Error::Shape(format!(
                "image {channels}x{height}x{width} needs {} values, got {}",
                channels * height * width,
                data.len()
            )));
        }
        Ok(Image {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Self {
        Image {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[self.index(c, y, x)]
    }

    /// Pixel with coordinates clamped into the image (replicate border).
    #[inline]
    pub fn get_clamped(&self, c: usize, y: isize, x: isize) -> T {
        let y = y.clamp(0, self.height as isize - 1) as usize;
        let x = x.clamp(0, self.width as isize - 1) as usize;
        self.get(c, y, x)
    }

    pub fn plane(&self, c: usize) -> &[T] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn same_geometry(&self) -> Self {
        Self::filled(self.channels, self.height, self.width, T::zero())
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels, self.height, self.width]
    }

    pub fn min_max(&self) -> (T, T) {
        self.data
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn to_tensor(&self) -> Tensor<T> {
        Tensor::new(&[1, self.channels, self.height, self.width], self.data.clone())
            .expect("image geometry is nonempty")
    }
}

/// Stacks equally sized images into an N×C×H×W batch.
pub fn stack<T: Scalar>(images: &[&Image<T>]) -> Result<Tensor<T>> {
    let first = images
        .first()
        .ok_or_else(|| Error::Shape("cannot stack an empty batch".into()))?;
    let mut data = Vec::with_capacity(images.len() * first.data.len());
    for img in images {
        if img.shape() != first.shape() {
            return Err(Error::Shape(format!(
                "batch mixes image shapes {:?} and {:?}",
                first.shape(),
                img.shape()
            )));
        }
        data.extend_from_slice(&img.data);
    }
    Tensor::new(&[images.len(), first.channels, first.height, first.width], data)
}

/// H×W map of class indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub height: usize,
    pub width: usize,
    pub data: Vec<u8>,
}

impl Mask {
    pub fn new(height: usize, width: usize, data: Vec<u8>) -> Result<Self> {
        if height == 0 || width == 0 || data.len() != height * width {
            return Err(Error::Shape(format!(
                "mask {height}x{width} with {} values",
                data.len()
            )));
        }
        Ok(Mask { height, width, data })
    }

    pub fn filled(height: usize, width: usize, class: u8) -> Self {
        Mask {
            height,
            width,
            data: vec![class; height * width],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn max_class(&self) -> u8 {
        self.data.iter().copied().max().unwrap_or(0)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.data.iter().map(|&c| c as usize)
    }

    /// Pixel count per class, `n_classes` long; larger indices are ignored.
    pub fn histogram(&self, n_classes: usize) -> Vec<usize> {
        let mut h = vec![0; n_classes];
        for c in self.indices().filter(|&c| c < n_classes) {
            h[c] += 1;
        }
        h
    }
}

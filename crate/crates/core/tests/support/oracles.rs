//! Independent reference implementations used as test oracles.

use pseudolabel::image::Image;
use rand::Rng;

/// Separable Gaussian blur with replicate borders: a 1-D normalized kernel
/// applied along rows, then along columns.
pub fn gaussian_blur(img: &Image<f64>, diameter: usize, sigma: f64) -> Image<f64> {
    let r = (diameter / 2) as isize;
    let raw: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let total: f64 = raw.iter().sum();
    let k: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let (h, w) = (img.height as isize, img.width as isize);
    let clamp = |v: isize, hi: isize| v.clamp(0, hi - 1) as usize;
    let mut rows = img.clone();
    for c in 0..img.channels {
        for y in 0..h {
            for x in 0..w {
                let v = (-r..=r)
                    .map(|d| k[(d + r) as usize] * img.get(c, y as usize, clamp(x + d, w)))
                    .sum();
                let i = img.index(c, y as usize, x as usize);
                rows.data[i] = v;
            }
        }
    }
    let mut out = rows.clone();
    for c in 0..img.channels {
        for y in 0..h {
            for x in 0..w {
                let v = (-r..=r)
                    .map(|d| k[(d + r) as usize] * rows.get(c, clamp(y + d, h), x as usize))
                    .sum();
                let i = img.index(c, y as usize, x as usize);
                out.data[i] = v;
            }
        }
    }
    out
}

/// Random image on the grid `k / 1024`, where `1 − x` is exact in binary
/// floating point.
pub fn dyadic_image<R: Rng>(rng: &mut R, channels: usize, height: usize, width: usize) -> Image<f64> {
    let data = (0..channels * height * width)
        .map(|_| rng.gen_range(0..=1024) as f64 / 1024.0)
        .collect();
    Image::new(channels, height, width, data).unwrap()
}

//! Seeded synthetic datasets with the two properties the method targets:
//! class imbalance and a large unlabeled pool.
//!
//! Classification images show a textured land background; "flooded" images
//! (class 1) additionally carry a smooth water blob covering 45–70 % of the
//! frame with a distinctly bluer colour. Segmentation images place coloured
//! rectangles and ellipses (classes 1..n) on a background (class 0), with
//! rarer classes drawn less often and smaller.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Sample, Split, Task};
use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::scalar::Scalar;
use crate::seeds::{rng_for, stream};

/// Smooth random field: a few low-frequency sinusoids.
struct Field {
    waves: Vec<(f64, f64, f64, f64)>,
}

impl Field {
    fn new(rng: &mut ChaCha8Rng, n: usize, max_freq: f64) -> Self {
        let waves = (0..n)
            .map(|_| {
                let theta = rng.gen_range(0.0..PI);
                let f = rng.gen_range(0.5..max_freq);
                (f * theta.cos(), f * theta.sin(), rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.5..1.0))
            })
            .collect();
        Field { waves }
    }

    /// Value at normalized coordinates (u, v) ∈ [0, 1]².
    fn at(&self, u: f64, v: f64) -> f64 {
        self.waves
            .iter()
            .map(|&(fu, fv, ph, amp)| amp * (2.0 * PI * (fu * u + fv * v) + ph).sin())
            .sum()
    }
}

fn jitter(rng: &mut ChaCha8Rng, base: [f64; 3], amount: f64) -> [f64; 3] {
    base.map(|c| c + rng.gen_range(-amount..amount))
}

fn finish<T: Scalar>(size: usize, rgb: &[[f64; 3]]) -> Image<T> {
    let hw = size * size;
    let mut data = vec![T::zero(); 3 * hw];
    for (i, px) in rgb.iter().enumerate() {
        for c in 0..3 {
            data[c * hw + i] = T::of(px[c].clamp(0.0, 1.0));
        }
    }
    Image::new(3, size, size, data).expect("nonempty synthetic image")
}

const LAND: [f64; 3] = [0.42, 0.46, 0.28];
const WATER: [f64; 3] = [0.30, 0.36, 0.62];

fn classification_image<T: Scalar>(rng: &mut ChaCha8Rng, size: usize, flooded: bool) -> Image<T> {
    let land = jitter(rng, LAND, 0.05);
    let water = jitter(rng, WATER, 0.05);
    let texture = Field::new(rng, 3, 3.0);
    let n = size * size;
    let coords = |i: usize| ((i % size) as f64 / size as f64, (i / size) as f64 / size as f64);

    // Flooded frames get a large blob; dry frames may still show a small puddle.
    let blob_fraction = if flooded {
        Some(rng.gen_range(0.45..0.70))
    } else if rng.gen_bool(0.3) {
        Some(rng.gen_range(0.02..0.06))
    } else {
        None
    };
    let mut in_blob = vec![false; n];
    if let Some(frac) = blob_fraction {
        let shape = Field::new(rng, 2, 1.5);
        let (cu, cv) = (rng.gen_range(0.2..0.8), rng.gen_range(0.2..0.8));
        let score: Vec<f64> = (0..n)
            .map(|i| {
                let (u, v) = coords(i);
                0.4 * shape.at(u, v) - 4.0 * ((u - cu).powi(2) + (v - cv).powi(2))
            })
            .collect();
        let mut sorted = score.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let k = ((frac * n as f64).round() as usize).clamp(1, n);
        let threshold = sorted[k - 1];
        for (flag, s) in in_blob.iter_mut().zip(&score) {
            *flag = *s >= threshold;
        }
    }
    let rgb: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let (u, v) = coords(i);
            let shade = 0.06 * texture.at(u, v);
            let base = if in_blob[i] { water } else { land };
            base.map(|c| c + shade + rng.gen_range(-0.05..0.05))
        })
        .collect();
    finish(size, &rgb)
}

/// `n` labeled training samples, `round(n · positive_fraction)` of them flooded
/// (label 1).
pub fn gen_synthetic_classification<T: Scalar>(
    n: usize,
    positive_fraction: f64,
    image_size: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    gen_classification_splits(&ClassificationSpec {
        n_labeled: n,
        n_unlabeled: 0,
        n_val: 0,
        n_test: 0,
        positive_fraction,
        image_size,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationSpec {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub positive_fraction: f64,
    pub image_size: usize,
    pub seed: u64,
}

fn check_size(image_size: usize) -> Result<()> {
    if image_size < 4 || image_size % 4 != 0 {
        return Err(Error::InvalidArgument(format!(
            "image size must be a positive multiple of 4, got {image_size}"
        )));
    }
    Ok(())
}

/// Labeled train, unlabeled train, val and test samples, all at the same
/// positive fraction. Unlabeled samples keep no label.
pub fn gen_classification_splits<T: Scalar>(spec: &ClassificationSpec) -> Result<Dataset<T>> {
    if !(spec.positive_fraction > 0.0 && spec.positive_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "positive fraction must be in (0, 1), got {}",
            spec.positive_fraction
        )));
    }
    check_size(spec.image_size)?;
    let groups = [
        ("lab", Split::Train, spec.n_labeled, true),
        ("unl", Split::Train, spec.n_unlabeled, false),
        ("val", Split::Val, spec.n_val, true),
        ("test", Split::Test, spec.n_test, true),
    ];
    let mut samples = Vec::new();
    for (g, (prefix, split, n, labeled)) in groups.into_iter().enumerate() {
        let positives = (n as f64 * spec.positive_fraction).round() as usize;
        let mut labels: Vec<usize> = (0..n).map(|i| usize::from(i < positives)).collect();
        labels.shuffle(&mut rng_for(spec.seed, stream::GEN_LABELS, g as u64));
        for (i, label) in labels.into_iter().enumerate() {
            let mut rng = rng_for(spec.seed, stream::GEN_IMAGE, ((g as u64) << 32) | i as u64);
            let image = classification_image(&mut rng, spec.image_size, label == 1);
            let id = format!("{prefix}{i:05}");
            samples.push(if labeled {
                Sample::with_label(id, split, image, label)
            } else {
                Sample::unlabeled(id, split, image)
            });
        }
    }
    Dataset::new(Task::Classification, 2, samples)
}

fn class_colour(c: usize) -> [f64; 3] {
    const PALETTE: [[f64; 3]; 10] = [
        [0.45, 0.40, 0.30],
        [0.15, 0.30, 0.85],
        [0.85, 0.20, 0.15],
        [0.20, 0.75, 0.25],
        [0.90, 0.85, 0.20],
        [0.60, 0.20, 0.70],
        [0.10, 0.75, 0.75],
        [0.95, 0.55, 0.10],
        [0.95, 0.95, 0.95],
        [0.05, 0.05, 0.10],
    ];
    if c < PALETTE.len() {
        return PALETTE[c];
    }
    // evenly spaced hues beyond the fixed palette
    let h = (c as f64 * 0.618_034).fract() * 6.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g, b) = match h as usize {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    [0.1 + 0.8 * r, 0.1 + 0.8 * g, 0.1 + 0.8 * b]
}

fn segmentation_image<T: Scalar>(rng: &mut ChaCha8Rng, size: usize, n_classes: usize) -> (Image<T>, Mask) {
    let n = size * size;
    let mut mask = vec![0u8; n];
    // class c ≥ 1 is drawn with weight 1/√c: background dominates, high indices are rare
    let weights: Vec<f64> = (1..n_classes).map(|c| 1.0 / (c as f64).sqrt()).collect();
    let total: f64 = weights.iter().sum();
    let shapes = rng.gen_range(2..=4);
    // per-image colour of each class present
    let mut class_rgb = vec![None; n_classes];
    class_rgb[0] = Some(jitter(rng, class_colour(0), 0.04));
    for _ in 0..shapes {
        let mut pick = rng.gen_range(0.0..total);
        let mut class = n_classes - 1;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                class = i + 1;
                break;
            }
            pick -= w;
        }
        // rarer classes are also smaller
        let scale = 1.0 - 0.4 * (class as f64 - 1.0) / (n_classes.max(2) as f64 - 1.0).max(1.0);
        let ry = rng.gen_range(0.10..0.22) * scale * size as f64;
        let rx = rng.gen_range(0.10..0.22) * scale * size as f64;
        let cy = rng.gen_range(ry..size as f64 - ry);
        let cx = rng.gen_range(rx..size as f64 - rx);
        let ellipse = rng.gen_bool(0.5);
        for y in 0..size {
            for x in 0..size {
                let dy = (y as f64 + 0.5 - cy) / ry;
                let dx = (x as f64 + 0.5 - cx) / rx;
                let inside = if ellipse {
                    dy * dy + dx * dx <= 1.0
                } else {
                    dy.abs() <= 1.0 && dx.abs() <= 1.0
                };
                if inside {
                    mask[y * size + x] = class as u8;
                }
            }
        }
        class_rgb[class] = Some(jitter(rng, class_colour(class), 0.04));
    }
    let shading = Field::new(rng, 2, 2.0);
    let rgb: Vec<[f64; 3]> = (0..n)
        .map(|i| {
            let c = mask[i] as usize;
            let base = class_rgb[c].unwrap_or_else(|| class_colour(c));
            let (u, v) = ((i % size) as f64 / size as f64, (i / size) as f64 / size as f64);
            let shade = 0.04 * shading.at(u, v);
            base.map(|ch| ch + shade + rng.gen_range(-0.04..0.04))
        })
        .collect();
    let mask = Mask::new(size, size, mask).expect("nonempty mask");
    (finish(size, &rgb), mask)
}

/// `n` labeled training samples with exact per-pixel class masks.
pub fn gen_synthetic_segmentation<T: Scalar>(
    n: usize,
    n_classes: usize,
    image_size: usize,
    seed: u64,
) -> Result<Dataset<T>> {
    gen_segmentation_splits(&SegmentationSpec {
        n_labeled: n,
        n_unlabeled: 0,
        n_val: 0,
        n_test: 0,
        n_classes,
        image_size,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationSpec {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub n_classes: usize,
    pub image_size: usize,
    pub seed: u64,
}

pub fn gen_segmentation_splits<T: Scalar>(spec: &SegmentationSpec) -> Result<Dataset<T>> {
    if !(2..=256).contains(&spec.n_classes) {
        return Err(Error::InvalidArgument(format!(
            "segmentation needs 2..=256 classes, got {}",
            spec.n_classes
        )));
    }
    check_size(spec.image_size)?;
    let groups = [
        ("lab", Split::Train, spec.n_labeled, true),
        ("unl", Split::Train, spec.n_unlabeled, false),
        ("val", Split::Val, spec.n_val, true),
        ("test", Split::Test, spec.n_test, true),
    ];
    let mut samples = Vec::new();
    for (g, (prefix, split, n, labeled)) in groups.into_iter().enumerate() {
        for i in 0..n {
            let mut rng = rng_for(spec.seed, stream::GEN_IMAGE, ((g as u64) << 32) | i as u64);
            let (image, mask) = segmentation_image(&mut rng, spec.image_size, spec.n_classes);
            let id = format!("{prefix}{i:05}");
            samples.push(if labeled {
                Sample::with_mask(id, split, image, mask)
            } else {
                Sample::unlabeled(id, split, image)
            });
        }
    }
    Dataset::new(Task::Segmentation, spec.n_classes, samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fraction of pixels bluer than they are green.
    fn blueness(img: &Image<f64>) -> f64 {
        let hw = (img.height * img.width) as f64;
        let blue = img.plane(2).iter().zip(img.plane(1)).filter(|(b, g)| b > g).count();
        blue as f64 / hw
    }

    #[test]
    fn positive_count_matches_fraction() {
        let d = gen_synthetic_classification::<f64>(398, 51.0 / 398.0, 8, 3).unwrap();
        assert_eq!(d.labels().iter().filter(|&&l| l == 1).count(), 51);
        assert_eq!(d.len(), 398);
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_synthetic_classification::<f64>(20, 0.3, 16, 9).unwrap();
        let b = gen_synthetic_classification::<f64>(20, 0.3, 16, 9).unwrap();
        assert_eq!(a, b);
        let c = gen_synthetic_classification::<f64>(20, 0.3, 16, 10).unwrap();
        assert_ne!(a, c);
        let s = gen_synthetic_segmentation::<f64>(5, 10, 16, 2).unwrap();
        assert_eq!(s, gen_synthetic_segmentation::<f64>(5, 10, 16, 2).unwrap());
    }

    #[test]
    fn threshold_oracle_separates_classes() {
        let d = gen_synthetic_classification::<f64>(1000, 0.5, 32, 21).unwrap();
        let correct = d
            .samples
            .iter()
            .filter(|s| usize::from(blueness(&s.image) > 0.25) == s.label.unwrap())
            .count();
        assert!(correct as f64 / 1000.0 > 0.9, "accuracy {}", correct as f64 / 1000.0);
    }

    #[test]
    fn masks_use_only_valid_classes() {
        let d = gen_synthetic_segmentation::<f64>(20, 10, 32, 4).unwrap();
        for s in &d.samples {
            assert!(s.mask.as_ref().unwrap().max_class() <= 9);
        }
    }

    #[test]
    fn class_histogram_is_background_dominated() {
        let d = gen_synthetic_segmentation::<f64>(100, 10, 32, 8).unwrap();
        let mut hist = vec![0usize; 10];
        for s in &d.samples {
            for (h, c) in hist.iter_mut().zip(s.mask.as_ref().unwrap().histogram(10)) {
                *h += c;
            }
        }
        let total: usize = hist.iter().sum();
        let frac: Vec<f64> = hist.iter().map(|&h| h as f64 / total as f64).collect();
        assert!(frac[0] > 0.5, "{frac:?}");
        for f in &frac[1..] {
            assert!(*f > 0.005, "{frac:?}");
        }
    }

    #[test]
    fn splits_have_requested_sizes() {
        let d = gen_classification_splits::<f64>(&ClassificationSpec {
            n_labeled: 6,
            n_unlabeled: 5,
            n_val: 4,
            n_test: 3,
            positive_fraction: 0.5,
            image_size: 8,
            seed: 1,
        })
        .unwrap();
        assert_eq!(d.split(Split::Train).labeled().len(), 6);
        assert_eq!(d.unlabeled().len(), 5);
        assert_eq!(d.split(Split::Val).len(), 4);
        assert_eq!(d.split(Split::Test).len(), 3);
        assert!(gen_synthetic_classification::<f64>(4, 1.0, 8, 0).is_err());
        assert!(gen_synthetic_classification::<f64>(4, 0.5, 6, 0).is_err());
    }
}

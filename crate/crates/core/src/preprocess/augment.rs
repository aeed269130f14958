use rand::Rng;

use crate::data::Sample;
use crate::image::{Image, Mask};
use crate::scalar::Scalar;

/// Random augmentation settings. Each transform fires with its probability;
/// a probability of zero disables it.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub hflip_p: f64,
    pub vflip_p: f64,
    /// Random crop covering `crop_min_scale..=1` of each side, resized back.
    pub crop_p: f64,
    pub crop_min_scale: f64,
    /// Translation of up to `max_shift` × the image extent per axis.
    pub shift_p: f64,
    pub max_shift: f64,
    pub rotate_p: f64,
    pub max_rotate_deg: f64,
    /// Zoom factor drawn from `scale_range`.
    pub scale_p: f64,
    pub scale_range: (f64, f64),
    pub brightness_contrast_p: f64,
    pub brightness: f64,
    pub contrast: f64,
}

impl AugmentConfig {
    pub fn none() -> Self {
        AugmentConfig {
            hflip_p: 0.0,
            vflip_p: 0.0,
            crop_p: 0.0,
            crop_min_scale: 0.8,
            shift_p: 0.0,
            max_shift: 0.1,
            rotate_p: 0.0,
            max_rotate_deg: 15.0,
            scale_p: 0.0,
            scale_range: (0.9, 1.1),
            brightness_contrast_p: 0.0,
            brightness: 0.2,
            contrast: 0.2,
        }
    }

    /// Crops, shifts, rescaling and flips along both axes.
    pub fn classification() -> Self {
        AugmentConfig {
            hflip_p: 0.5,
            vflip_p: 0.5,
            crop_p: 0.5,
            shift_p: 0.5,
            scale_p: 0.5,
            ..Self::none()
        }
    }

    /// Rotation, scaling, shifting and brightness/contrast.
    pub fn segmentation() -> Self {
        AugmentConfig {
            shift_p: 0.5,
            rotate_p: 0.5,
            scale_p: 0.5,
            brightness_contrast_p: 0.5,
            ..Self::none()
        }
    }

    pub fn is_identity(&self) -> bool {
        [
            self.hflip_p,
            self.vflip_p,
            self.crop_p,
            self.shift_p,
            self.rotate_p,
            self.scale_p,
            self.brightness_contrast_p,
        ]
        .iter()
        .all(|&p| p <= 0.0)
    }
}

/// Output-to-source map `u ↦ M·u + t` in centred pixel coordinates.
#[derive(Debug, Clone, Copy)]
struct Affine {
    m: [[f64; 2]; 2],
    t: [f64; 2],
}

impl Affine {
    const IDENTITY: Affine = Affine {
        m: [[1.0, 0.0], [0.0, 1.0]],
        t: [0.0, 0.0],
    };

    /// `self ∘ other`: apply `other` first, then `self`, on source lookups.
    fn then(self, other: Affine) -> Affine {
        let a = self.m;
        let b = other.m;
        Affine {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
            t: [
                a[0][0] * other.t[0] + a[0][1] * other.t[1] + self.t[0],
                a[1][0] * other.t[0] + a[1][1] * other.t[1] + self.t[1],
            ],
        }
    }

    /// Source (y, x) in index coordinates for output pixel (y, x).
    fn source(&self, y: usize, x: usize, h: usize, w: usize) -> (f64, f64) {
        let (cy, cx) = (h as f64 / 2.0, w as f64 / 2.0);
        let u = [y as f64 + 0.5 - cy, x as f64 + 0.5 - cx];
        let sy = self.m[0][0] * u[0] + self.m[0][1] * u[1] + self.t[0];
        let sx = self.m[1][0] * u[0] + self.m[1][1] * u[1] + self.t[1];
        (sy + cy - 0.5, sx + cx - 0.5)
    }
}

fn warp_image<T: Scalar>(img: &Image<T>, a: &Affine) -> Image<T> {
    let mut out = img.same_geometry();
    let (h, w) = (img.height, img.width);
    for y in 0..h {
        for x in 0..w {
            let (sy, sx) = a.source(y, x, h, w);
            let sy = sy.clamp(0.0, (h - 1) as f64);
            let sx = sx.clamp(0.0, (w - 1) as f64);
            let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
            let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
            let (fy, fx) = (T::of(sy - y0 as f64), T::of(sx - x0 as f64));
            let one = T::one();
            for c in 0..img.channels {
                let top = img.get(c, y0, x0) * (one - fx) + img.get(c, y0, x1) * fx;
                let bottom = img.get(c, y1, x0) * (one - fx) + img.get(c, y1, x1) * fx;
                let i = img.index(c, y, x);
                out.data[i] = top * (one - fy) + bottom * fy;
            }
        }
    }
    out
}

fn warp_mask(mask: &Mask, a: &Affine) -> Mask {
    let (h, w) = (mask.height, mask.width);
    let mut data = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (sy, sx) = a.source(y, x, h, w);
            let sy = (sy.round().max(0.0) as usize).min(h - 1);
            let sx = (sx.round().max(0.0) as usize).min(w - 1);
            data.push(mask.get(sy, sx));
        }
    }
    Mask { height: h, width: w, data }
}

fn flip_image<T: Scalar>(img: &Image<T>, horizontal: bool) -> Image<T> {
    let mut out = img.same_geometry();
    let (h, w) = (img.height, img.width);
    for c in 0..img.channels {
        for y in 0..h {
            for x in 0..w {
                let (sy, sx) = if horizontal { (y, w - 1 - x) } else { (h - 1 - y, x) };
                let i = img.index(c, y, x);
                out.data[i] = img.get(c, sy, sx);
            }
        }
    }
    out
}

fn flip_mask(mask: &Mask, horizontal: bool) -> Mask {
    let (h, w) = (mask.height, mask.width);
    let mut data = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            let (sy, sx) = if horizontal { (y, w - 1 - x) } else { (h - 1 - y, x) };
            data.push(mask.get(sy, sx));
        }
    }
    Mask { height: h, width: w, data }
}

/// Applies the configured random transforms to an image and, with the same
/// geometry and nearest sampling, to its mask.
pub fn augment_pair<T: Scalar, R: Rng>(
    image: &Image<T>,
    mask: Option<&Mask>,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> (Image<T>, Option<Mask>) {
    let mut img = image.clone();
    let mut mask = mask.cloned();
    let fires = |p: f64, rng: &mut R| p > 0.0 && rng.gen::<f64>() < p;

    for horizontal in [true, false] {
        let p = if horizontal { cfg.hflip_p } else { cfg.vflip_p };
        if fires(p, rng) {
            img = flip_image(&img, horizontal);
            mask = mask.map(|m| flip_mask(&m, horizontal));
        }
    }

    let (h, w) = (img.height as f64, img.width as f64);
    let mut geo = Affine::IDENTITY;
    let mut warped = false;
    if fires(cfg.crop_p, rng) {
        let s = rng.gen_range(cfg.crop_min_scale.min(1.0)..=1.0);
        let oy = rng.gen_range(-0.5..=0.5) * (1.0 - s) * h;
        let ox = rng.gen_range(-0.5..=0.5) * (1.0 - s) * w;
        geo = geo.then(Affine { m: [[s, 0.0], [0.0, s]], t: [oy, ox] });
        warped = true;
    }
    if fires(cfg.shift_p, rng) {
        let dy = rng.gen_range(-cfg.max_shift..=cfg.max_shift) * h;
        let dx = rng.gen_range(-cfg.max_shift..=cfg.max_shift) * w;
        geo = geo.then(Affine { m: Affine::IDENTITY.m, t: [-dy, -dx] });
        warped = true;
    }
    if fires(cfg.rotate_p, rng) {
        let th = rng.gen_range(-cfg.max_rotate_deg..=cfg.max_rotate_deg).to_radians();
        let (s, c) = th.sin_cos();
        geo = geo.then(Affine { m: [[c, s], [-s, c]], t: [0.0, 0.0] });
        warped = true;
    }
    if fires(cfg.scale_p, rng) {
        let (lo, hi) = cfg.scale_range;
        let z = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
        geo = geo.then(Affine { m: [[1.0 / z, 0.0], [0.0, 1.0 / z]], t: [0.0, 0.0] });
        warped = true;
    }
    if warped {
        img = warp_image(&img, &geo);
        mask = mask.map(|m| warp_mask(&m, &geo));
    }

    if fires(cfg.brightness_contrast_p, rng) {
        let b = T::of(rng.gen_range(-cfg.brightness..=cfg.brightness));
        let k = T::of(1.0 + rng.gen_range(-cfg.contrast..=cfg.contrast));
        let half = T::of(0.5);
        for v in img.data.iter_mut() {
            *v = ((*v - half) * k + half + b).max(T::zero()).min(T::one());
        }
    }
    (img, mask)
}

/// Augmented copy of a sample; label and identity are unchanged.
pub fn augment<T: Scalar, R: Rng>(sample: &Sample<T>, cfg: &AugmentConfig, rng: &mut R) -> Sample<T> {
    if cfg.is_identity() {
        return sample.clone();
    }
    let (image, mask) = augment_pair(&sample.image, sample.mask.as_ref(), cfg, rng);
    Sample {
        image,
        mask,
        ..sample.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(c: usize, h: usize, w: usize) -> Image<f64> {
        let data = (0..c * h * w).map(|i| (i % 97) as f64 / 96.0).collect();
        Image::new(c, h, w, data).unwrap()
    }

    #[test]
    fn identity_config_changes_nothing() {
        let img = ramp(3, 8, 8);
        let mask = Mask::filled(8, 8, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (i2, m2) = augment_pair(&img, Some(&mask), &AugmentConfig::none(), &mut rng);
        assert_eq!(i2, img);
        assert_eq!(m2.unwrap(), mask);
    }

    #[test]
    fn double_flip_is_identity() {
        let img = ramp(2, 5, 6);
        assert_eq!(flip_image(&flip_image(&img, true), true), img);
        assert_eq!(flip_image(&flip_image(&img, false), false), img);
        let once = flip_image(&img, true);
        assert_eq!(once.get(1, 2, 0), img.get(1, 2, 5));
    }

    #[test]
    fn pure_shift_moves_content() {
        let mut img = Image::<f64>::filled(1, 8, 8, 0.0);
        let i = img.index(0, 4, 4);
        img.data[i] = 1.0;
        let shift = Affine { m: Affine::IDENTITY.m, t: [-1.0, -2.0] };
        let out = warp_image(&img, &shift);
        assert_eq!(out.get(0, 5, 6), 1.0);
    }

    #[test]
    fn same_seed_same_result() {
        let img = ramp(3, 16, 16);
        let mask = Mask::new(16, 16, (0..256).map(|i| (i % 4) as u8).collect()).unwrap();
        let cfg = AugmentConfig {
            hflip_p: 0.5,
            ..AugmentConfig::segmentation()
        };
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            augment_pair(&img, Some(&mask), &cfg, &mut rng)
        };
        assert_eq!(run(5), run(5));
        let (out, m) = run(5);
        let (lo, hi) = out.min_max();
        assert!(lo >= 0.0 && hi <= 1.0);
        assert!(m.unwrap().data.iter().all(|&c| c < 4));
    }
}

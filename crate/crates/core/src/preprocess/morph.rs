use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphKind {
    Dilate,
    Erode,
}

/// Max (dilate) or min (erode) filter over a 3×3 square with replicate
/// borders, applied `iterations` times.
pub fn morph<T: Scalar>(img: &Image<T>, kind: MorphKind, iterations: usize) -> Result<Image<T>> {
    if iterations == 0 {
        return Err(Error::InvalidArgument("morphology needs at least one iteration".into()));
    }
    let pick = match kind {
        MorphKind::Dilate => T::max,
        MorphKind::Erode => T::min,
    };
    let mut cur = img.clone();
    for _ in 0..iterations {
        let mut next = cur.same_geometry();
        for c in 0..cur.channels {
            for y in 0..cur.height as isize {
                for x in 0..cur.width as isize {
                    let mut v = cur.get(c, y as usize, x as usize);
                    for dy in -1..=1 {
                        for dx in -1..=1 {
                            v = pick(v, cur.get_clamped(c, y + dy, x + dx));
                        }
                    }
                    let i = cur.index(c, y as usize, x as usize);
                    next.data[i] = v;
                }
            }
        }
        cur = next;
    }
    Ok(cur)
}

pub fn dilate<T: Scalar>(img: &Image<T>, iterations: usize) -> Result<Image<T>> {
    morph(img, MorphKind::Dilate, iterations)
}

pub fn erode<T: Scalar>(img: &Image<T>, iterations: usize) -> Result<Image<T>> {
    morph(img, MorphKind::Erode, iterations)
}

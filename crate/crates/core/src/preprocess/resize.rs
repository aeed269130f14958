use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    Bilinear,
    Nearest,
}

fn check_extent(out_h: usize, out_w: usize) -> Result<()> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::InvalidArgument(format!("resize target {out_h}x{out_w}")));
    }
    Ok(())
}

/// Source coordinate of output index `o` under half-pixel centring.
#[inline]
fn src_coord(o: usize, scale: f64) -> f64 {
    (o as f64 + 0.5) * scale - 0.5
}

#[inline]
fn nearest_index(o: usize, scale: f64, len: usize) -> usize {
    (((o as f64 + 0.5) * scale).floor() as usize).min(len - 1)
}

pub fn resize<T: Scalar>(img: &Image<T>, out_h: usize, out_w: usize, mode: Interpolation) -> Result<Image<T>> {
    check_extent(out_h, out_w)?;
    let sy = img.height as f64 / out_h as f64;
    let sx = img.width as f64 / out_w as f64;
    let mut out = Image::filled(img.channels, out_h, out_w, T::zero());
    for c in 0..img.channels {
        for y in 0..out_h {
            for x in 0..out_w {
                let v = match mode {
                    Interpolation::Nearest => img.get(
                        c,
                        nearest_index(y, sy, img.height),
                        nearest_index(x, sx, img.width),
                    ),
                    Interpolation::Bilinear => {
                        let fy = src_coord(y, sy).clamp(0.0, (img.height - 1) as f64);
                        let fx = src_coord(x, sx).clamp(0.0, (img.width - 1) as f64);
                        let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
                        let (y1, x1) = ((y0 + 1).min(img.height - 1), (x0 + 1).min(img.width - 1));
                        let (wy, wx) = (T::of(fy - y0 as f64), T::of(fx - x0 as f64));
                        let one = T::one();
                        let top = img.get(c, y0, x0) * (one - wx) + img.get(c, y0, x1) * wx;
                        let bottom = img.get(c, y1, x0) * (one - wx) + img.get(c, y1, x1) * wx;
                        top * (one - wy) + bottom * wy
                    }
                };
                out.data[(c * out_h + y) * out_w + x] = v;
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbour resize; never produces a class absent from the source.
pub fn resize_mask(mask: &Mask, out_h: usize, out_w: usize) -> Result<Mask> {
    check_extent(out_h, out_w)?;
    let sy = mask.height as f64 / out_h as f64;
    let sx = mask.width as f64 / out_w as f64;
    let mut data = Vec::with_capacity(out_h * out_w);
    for y in 0..out_h {
        let sy_i = nearest_index(y, sy, mask.height);
        for x in 0..out_w {
            data.push(mask.get(sy_i, nearest_index(x, sx, mask.width)));
        }
    }
    Mask::new(out_h, out_w, data)
}

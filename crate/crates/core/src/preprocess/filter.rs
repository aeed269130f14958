use crate::error::{Error, Result};
use crate::image::Image;
use crate::scalar::Scalar;

/// Bilateral filter over a `diameter × diameter` window with replicate
/// borders. Each channel is filtered on its own: a neighbour's weight is
/// `exp(−d²/2σ_space²) · exp(−Δ²/2σ_color²)`, where `d` is the pixel distance
/// and `Δ` the intensity difference to the centre pixel, and weights are
/// normalized per output pixel.
pub fn bilateral_filter<T: Scalar>(
    img: &Image<T>,
    diameter: usize,
    sigma_color: f64,
    sigma_space: f64,
) -> Result<Image<T>> {
    if diameter % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "bilateral diameter must be odd, got {diameter}"
        )));
    }
    if !(sigma_color > 0.0 && sigma_space > 0.0) {
        return Err(Error::InvalidArgument("bilateral sigmas must be positive".into()));
    }
    let r = (diameter / 2) as isize;
    let space: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dy, dx)))
        .map(|(dy, dx)| (-((dy * dy + dx * dx) as f64) / (2.0 * sigma_space * sigma_space)).exp())
        .collect();
    let color_scale = -1.0 / (2.0 * sigma_color * sigma_color);
    let mut out = img.same_geometry();
    for c in 0..img.channels {
        for y in 0..img.height as isize {
            for x in 0..img.width as isize {
                let centre = img.get(c, y as usize, x as usize).as_f64();
                let (mut acc, mut norm) = (0.0, 0.0);
                let mut k = 0;
                for dy in -r..=r {
                    for dx in -r..=r {
                        let v = img.get_clamped(c, y + dy, x + dx).as_f64();
                        let diff = v - centre;
                        let w = space[k] * (diff * diff * color_scale).exp();
                        acc += w * v;
                        norm += w;
                        k += 1;
                    }
                }
                let i = img.index(c, y as usize, x as usize);
                out.data[i] = T::of(acc / norm);
            }
        }
    }
    Ok(out)
}

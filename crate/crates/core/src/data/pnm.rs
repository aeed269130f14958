//! Binary PNM: P5 (grayscale) and P6 (RGB), maxval 255.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{Image, Mask};
use crate::scalar::Scalar;

/// Raw 8-bit raster: `channels` is 1 for P5 and 3 for P6; samples are
/// interleaved per pixel as stored in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pnm {
    pub channels: usize,
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while self.bytes.get(self.pos).is_some_and(|&b| b != b'\n') {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> std::result::Result<usize, String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("bad {what} in header"))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> std::result::Result<Pnm, String> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err("bad magic (expected P5 or P6)".into()),
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width")?;
    let height = h.number("height")?;
    let maxval = h.number("maxval")?;
    if maxval != 255 {
        return Err(format!("maxval {maxval} unsupported (expected 255)"));
    }
    if width == 0 || height == 0 {
        return Err("zero image dimension".into());
    }
    if !bytes.get(h.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after maxval".into());
    }
    let start = h.pos + 1;
    let need = width * height * channels;
    let payload = bytes
        .get(start..start + need)
        .ok_or_else(|| format!("truncated payload: need {need} bytes, have {}", bytes.len() - start))?;
    Ok(Pnm {
        channels,
        width,
        height,
        pixels: payload.to_vec(),
    })
}

pub fn encode_pnm(p: &Pnm) -> Vec<u8> {
    let magic = if p.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", p.width, p.height).into_bytes();
    out.extend_from_slice(&p.pixels);
    out
}

fn read_pnm(path: &Path) -> Result<Pnm> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes).map_err(|msg| Error::Format {
        path: path.to_path_buf(),
        msg,
    })
}

/// Reads a P5/P6 file into a C×H×W image scaled to `[0, 1]`.
pub fn read_image<T: Scalar>(path: &Path) -> Result<Image<T>> {
    let p = read_pnm(path)?;
    let (c, hw) = (p.channels, p.width * p.height);
    let mut data = vec![T::zero(); c * hw];
    for (i, px) in p.pixels.chunks(c).enumerate() {
        for (ch, &v) in px.iter().enumerate() {
            data[ch * hw + i] = T::of(v as f64 / 255.0);
        }
    }
    Image::new(c, p.height, p.width, data)
}

/// Writes a 1- or 3-channel image as P5/P6, rounding `v·255` half up.
pub fn write_image<T: Scalar>(path: &Path, img: &Image<T>) -> Result<()> {
    if img.channels != 1 && img.channels != 3 {
        return Err(Error::InvalidArgument(format!(
            "PNM holds 1 or 3 channels, image has {}",
            img.channels
        )));
    }
    let hw = img.height * img.width;
    let mut pixels = Vec::with_capacity(img.data.len());
    for i in 0..hw {
        for c in 0..img.channels {
            let v = img.data[c * hw + i].as_f64().clamp(0.0, 1.0);
            pixels.push((v * 255.0 + 0.5).floor() as u8);
        }
    }
    let p = Pnm {
        channels: img.channels,
        width: img.width,
        height: img.height,
        pixels,
    };
    fs::write(path, encode_pnm(&p)).map_err(|e| Error::io(path, e))
}

/// Reads a P5 file whose pixel values are class indices.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let p = read_pnm(path)?;
    if p.channels != 1 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: "masks must be P5 grayscale".into(),
        });
    }
    Mask::new(p.height, p.width, p.pixels)
}

pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let p = Pnm {
        channels: 1,
        width: mask.width,
        height: mask.height,
        pixels: mask.data.clone(),
    };
    fs::write(path, encode_pnm(&p)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn p5_example() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.pgm");
        let mut bytes = b"P5\n2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 64]);
        fs::write(&path, bytes).unwrap();
        let img = read_image::<f64>(&path).unwrap();
        assert_eq!(img.shape(), [1, 2, 2]);
        assert_eq!(img.data, vec![0.0, 128.0 / 255.0, 1.0, 64.0 / 255.0]);
    }

    #[test]
    fn p6_example() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.ppm");
        fs::write(&path, b"P6 1 1 255\n\xff\x00\x00").unwrap();
        let img = read_image::<f64>(&path).unwrap();
        assert_eq!(img.shape(), [3, 1, 1]);
        assert_eq!(img.data, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let p = decode_pnm(b"P5 # made by hand\n1 # w\n1\n255\n\x07").unwrap();
        assert_eq!(p.pixels, vec![7]);
    }

    #[test]
    fn rejects_bad_magic_truncation_and_maxval() {
        assert!(decode_pnm(b"P3\n1 1 255\n0 0 0").is_err());
        assert!(decode_pnm(b"P6\n2 2 255\n\x00\x00\x00").is_err());
        assert!(decode_pnm(b"P5\n1 1 65535\n\x00\x00").is_err());
        assert!(decode_pnm(b"").is_err());
    }

    proptest! {
        #[test]
        fn write_read_is_identity_on_8bit(
            (h, w, rgb, px) in (1usize..6, 1usize..6, any::<bool>())
                .prop_flat_map(|(h, w, rgb)| {
                    let c = if rgb { 3 } else { 1 };
                    (Just(h), Just(w), Just(rgb), proptest::collection::vec(any::<u8>(), h * w * c))
                })
        ) {
            let c = if rgb { 3 } else { 1 };
            let data: Vec<f64> = px.iter().map(|&v| v as f64 / 255.0).collect();
            let img = Image::new(c, h, w, data).unwrap();
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("x.pnm");
            write_image(&path, &img).unwrap();
            let back = read_image::<f64>(&path).unwrap();
            prop_assert_eq!(back, img);
        }
    }
}

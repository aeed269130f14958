//! Flat binary model checkpoints.
//!
//! Layout (all integers u64 little-endian unless noted):
//!
//! ```text
//! b"PLCKPT01"                      magic
//! kind: u8                         0 = classifier, 1 = segmenter
//! in_channels, n_classes, base_width, seed
//! total                            number of f64 values that follow
//! f64 LE × total                   parameters in declaration order
//! ```

use std::fs;
use std::path::Path;

use super::{Model, ModelConfig, ModelKind};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MAGIC: &[u8; 8] = b"PLCKPT01";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub config: ModelConfig,
    pub values: Vec<f64>,
}

pub fn save_checkpoint<T: Scalar, M: Model<T>>(model: &M, path: &Path) -> Result<()> {
    let cfg = model.config();
    let total = model.num_parameters();
    let mut buf = Vec::with_capacity(8 + 1 + 5 * 8 + total * 8);
    buf.extend_from_slice(MAGIC);
    buf.push(match model.kind() {
        ModelKind::Classifier => 0,
        ModelKind::Segmenter => 1,
    });
    for v in [cfg.in_channels as u64, cfg.n_classes as u64, cfg.base_width as u64, cfg.seed, total as u64] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for p in model.parameters() {
        for v in p.data() {
            buf.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn read_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint(format!("{}: bad magic", path.display())));
    }
    let kind = match r.take(1)?[0] {
        0 => ModelKind::Classifier,
        1 => ModelKind::Segmenter,
        k => return Err(Error::Checkpoint(format!("unknown model kind {k}"))),
    };
    let config = ModelConfig {
        in_channels: r.u64()? as usize,
        n_classes: r.u64()? as usize,
        base_width: r.u64()? as usize,
        seed: r.u64()?,
    };
    let total = r.u64()? as usize;
    let payload = r.take(total.checked_mul(8).ok_or_else(|| Error::Checkpoint("bad length".into()))?)?;
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }
    Ok(Checkpoint { kind, config, values })
}

/// Loads parameters from `path` into `model`. The stored architecture (kind,
/// input channels, classes, width) must match the model's.
pub fn load_checkpoint<T: Scalar, M: Model<T>>(path: &Path, model: &mut M) -> Result<()> {
    let ckpt = read_checkpoint(path)?;
    let want = model.config();
    let arch = |c: &ModelConfig| (c.in_channels, c.n_classes, c.base_width);
    if ckpt.kind != model.kind() || arch(&ckpt.config) != arch(want) {
        return Err(Error::Checkpoint(format!(
            "checkpoint holds {:?} {:?}, model is {:?} {:?}",
            ckpt.kind,
            ckpt.config,
            model.kind(),
            want
        )));
    }
    if ckpt.values.len() != model.num_parameters() {
        return Err(Error::Checkpoint(format!(
            "checkpoint has {} values, model needs {}",
            ckpt.values.len(),
            model.num_parameters()
        )));
    }
    let mut offset = 0;
    for p in model.parameters_mut() {
        let n = p.numel();
        let data = ckpt.values[offset..offset + n].iter().map(|&v| T::of(v)).collect();
        *p = Tensor::parameter(p.shape(), data)?;
        offset += n;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{ClassifierModel, SegmenterModel};

    #[test]
    fn round_trip_restores_parameters() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        let cfg = ModelConfig { seed: 11, ..ModelConfig::default() };
        let trained = ClassifierModel::<f64>::new(cfg).unwrap();
        save_checkpoint(&trained, &path).unwrap();

        let mut fresh = ClassifierModel::<f64>::new(ModelConfig { seed: 99, ..cfg }).unwrap();
        load_checkpoint(&path, &mut fresh).unwrap();
        for (a, b) in trained.parameters().iter().zip(fresh.parameters()) {
            assert_eq!(a.data(), b.data());
            assert!(b.requires_grad());
        }
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(bytes.len(), 8 + 1 + 5 * 8 + 8 * trained.num_parameters());
    }

    #[test]
    fn rejects_mismatched_config_and_kind() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        let seg_cfg = ModelConfig { n_classes: 10, ..ModelConfig::default() };
        save_checkpoint(&SegmenterModel::<f64>::new(seg_cfg).unwrap(), &path).unwrap();

        let mut other = SegmenterModel::<f64>::new(ModelConfig { n_classes: 4, ..seg_cfg }).unwrap();
        assert!(matches!(load_checkpoint(&path, &mut other), Err(Error::Checkpoint(_))));
        let mut cls = ClassifierModel::<f64>::new(ModelConfig::default()).unwrap();
        assert!(load_checkpoint(&path, &mut cls).is_err());
    }

    #[test]
    fn rejects_truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ckpt");
        save_checkpoint(&ClassifierModel::<f64>::new(ModelConfig::default()).unwrap(), &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_checkpoint(&path).is_err());
        std::fs::write(&path, b"P6 not a checkpoint").unwrap();
        assert!(read_checkpoint(&path).is_err());
    }
}

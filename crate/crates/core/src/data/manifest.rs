//! CSV manifests: `id,split,image,label,mask,labeled`, paths relative to the
//! manifest's directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::pnm::{read_image, read_mask, write_image, write_mask};
use super::{Dataset, Sample, Split, Task};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    id: String,
    split: String,
    image: String,
    label: Option<usize>,
    mask: Option<String>,
    labeled: u8,
}

const HEADER: [&str; 6] = ["id", "split", "image", "label", "mask", "labeled"];

/// Loads every row of the manifest at `path`. Row numbers in errors count
/// data rows from 1.
pub fn load_manifest<T: Scalar>(path: &Path, task: Task, n_classes: usize) -> Result<Dataset<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if text.trim().is_empty() {
        return Dataset::new(task, n_classes, Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::Format {
            path: path.to_path_buf(),
            msg: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut samples = Vec::new();
    for (i, rec) in reader.deserialize::<Row>().enumerate() {
        let row_no = i + 1;
        let fail = |msg: String| Error::Manifest { row: row_no, msg };
        let row = rec.map_err(|e| fail(e.to_string()))?;
        let split: Split = row.split.parse().map_err(|e: Error| fail(e.to_string()))?;
        let labeled = match row.labeled {
            0 => false,
            1 => true,
            v => return Err(fail(format!("labeled must be 0 or 1, got {v}"))),
        };
        let image = read_image::<T>(&base.join(&row.image)).map_err(|e| fail(e.to_string()))?;
        let mask = match row.mask.as_deref().filter(|m| !m.is_empty()) {
            Some(m) => Some(read_mask(&base.join(m)).map_err(|e| fail(e.to_string()))?),
            None => None,
        };
        let sample = Sample {
            id: row.id,
            split,
            image,
            label: row.label,
            mask,
            labeled,
        };
        sample
            .validate(task, n_classes)
            .map_err(|e| fail(e.to_string()))?;
        samples.push(sample);
    }
    Dataset::new(task, n_classes, samples)
}

/// Writes `images/<id>.ppm` (or `.pgm`), `masks/<id>.pgm` and `manifest.csv`
/// under `dir`; returns the manifest path.
pub fn write_manifest<T: Scalar>(dir: &Path, dataset: &Dataset<T>) -> Result<PathBuf> {
    for sub in ["images", "masks"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
    }
    let manifest = dir.join("manifest.csv");
    let mut w = csv::Writer::from_path(&manifest)?;
    for s in &dataset.samples {
        let ext = if s.image.channels == 1 { "pgm" } else { "ppm" };
        let image_rel = format!("images/{}.{ext}", s.id);
        write_image(&dir.join(&image_rel), &s.image)?;
        let mask_rel = match &s.mask {
            Some(m) => {
                let rel = format!("masks/{}.pgm", s.id);
                write_mask(&dir.join(&rel), m)?;
                Some(rel)
            }
            None => None,
        };
        w.serialize(Row {
            id: s.id.clone(),
            split: s.split.to_string(),
            image: image_rel,
            label: s.label,
            mask: mask_rel,
            labeled: s.labeled as u8,
        })?;
    }
    if dataset.is_empty() {
        w.write_record(HEADER)?;
    }
    w.flush().map_err(|e| Error::io(&manifest, e))?;
    Ok(manifest)
}

//! Dataset persistence.
//!
//! A dataset directory holds:
//! - `manifest.json` — geometry, generation config, seed, sample count, and
//!   the format version;
//! - `labels.json` — JSON array of scenes (angle/range/regime per source
//!   plus coherence), index-aligned with the blobs;
//! - `sample_00000.bin`, ... — one blob per sample: little-endian `f64`,
//!   interleaved real/imaginary, row-major `N x T`
//!   (`re(x[0,0]), im(x[0,0]), re(x[0,1]), ...`).

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::dataset::{DatasetMetadata, LabeledDataset};
use crate::error::ArraySignalError;
use crate::scene::SourceScene;
use crate::simulate::SnapshotMatrix;
use crate::Result;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format_version: u32,
    sample_count: usize,
    #[serde(flatten)]
    metadata: DatasetMetadata,
}

pub fn sample_file_name(index: usize) -> String {
    format!("sample_{index:05}.bin")
}

/// Writes the dataset into `dir` (created if missing).
pub fn save_dataset(dataset: &LabeledDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        sample_count: dataset.len(),
        metadata: dataset.metadata.clone(),
    };
    fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    let scenes: Vec<&SourceScene> = dataset.samples.iter().map(|(_, s)| s).collect();
    fs::write(dir.join("labels.json"), serde_json::to_vec_pretty(&scenes)?)?;
    for (index, (x, _)) in dataset.samples.iter().enumerate() {
        let mut file = fs::File::create(dir.join(sample_file_name(index)))?;
        let mut buf = Vec::with_capacity(x.data().len() * 16);
        for row in x.data().rows() {
            for v in row {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        file.write_all(&buf)?;
    }
    Ok(())
}

/// Loads a dataset previously written by [`save_dataset`].
pub fn load_dataset(dir: &Path) -> Result<LabeledDataset> {
    let manifest: Manifest =
        serde_json::from_slice(&fs::read(dir.join("manifest.json"))?)?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(ArraySignalError::Format(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    let scenes: Vec<SourceScene> = serde_json::from_slice(&fs::read(dir.join("labels.json"))?)?;
    if scenes.len() != manifest.sample_count {
        return Err(ArraySignalError::Format(format!(
            "labels hold {} scenes, manifest says {}",
            scenes.len(),
            manifest.sample_count
        )));
    }
    let n = manifest.metadata.geometry.num_elements();
    let t = manifest.metadata.config.snapshots;
    let mut samples = Vec::with_capacity(scenes.len());
    for (index, scene) in scenes.into_iter().enumerate() {
        let mut file = fs::File::open(dir.join(sample_file_name(index)))?;
        let mut buf = Vec::new();
        file.read_to_end(&mut buf)?;
        let expected = n * t * 16;
        if buf.len() != expected {
            return Err(ArraySignalError::Format(format!(
                "sample {index}: expected {expected} bytes, found {}",
                buf.len()
            )));
        }
        let mut data = Array2::<Complex64>::zeros((n, t));
        for (k, v) in data.iter_mut().enumerate() {
            let off = k * 16;
            let re = f64::from_le_bytes(buf[off..off + 8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[off + 8..off + 16].try_into().unwrap());
            *v = Complex64::new(re, im);
        }
        samples.push((SnapshotMatrix::new(data), scene));
    }
    Ok(LabeledDataset {
        samples,
        metadata: manifest.metadata,
    })
}

//! Dataset container: `manifest.json`, `frames.f32` and `labels.json` in one
//! directory.
//!
//! `frames.f32` holds little-endian float32 samples in row-major
//! `[frame][channel][sample]` order; `labels.json` is an array with one array
//! of fractional sample positions per frame.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{LabeledFrame, SyntheticConfig};
use crate::error::{Error, Result};
use crate::signal::Frame;

pub const DATASET_FORMAT_VERSION: u32 = 1;

const MANIFEST: &str = "manifest.json";
const FRAMES: &str = "frames.f32";
const LABELS: &str = "labels.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub n_frames: usize,
    #[serde(rename = "N")]
    pub frame_length: usize,
    #[serde(rename = "C")]
    pub channels: usize,
    #[serde(rename = "R")]
    pub upsample: usize,
    pub sample_rate_hz: f64,
    pub seed: Option<u64>,
    pub generator: Option<SyntheticConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub frames: Vec<LabeledFrame>,
}

/// Writes `frames` to the directory `path`, creating it if needed. All
/// frames must share length, channel count and sample rate.
pub fn save_dataset(
    path: &Path,
    frames: &[LabeledFrame],
    upsample: usize,
    seed: Option<u64>,
    generator: Option<&SyntheticConfig>,
) -> Result<DatasetManifest> {
    let first = frames
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot save an empty dataset".into()))?
        .frame();
    let (n, c, rate) = (first.len(), first.channels(), first.sample_rate_hz());
    if let Some((i, _)) = frames.iter().enumerate().find(|(_, lf)| {
        let f = lf.frame();
        f.len() != n || f.channels() != c || f.sample_rate_hz() != rate
    }) {
        return Err(Error::Shape(format!(
            "frame {i} differs in length, channel count or sample rate from frame 0"
        )));
    }
    fs::create_dir_all(path)?;

    let manifest = DatasetManifest {
        format_version: DATASET_FORMAT_VERSION,
        n_frames: frames.len(),
        frame_length: n,
        channels: c,
        upsample,
        sample_rate_hz: rate,
        seed,
        generator: generator.cloned(),
    };
    fs::write(path.join(MANIFEST), serde_json::to_string_pretty(&manifest)?)?;

    let mut w = BufWriter::new(fs::File::create(path.join(FRAMES))?);
    for lf in frames {
        for row in lf.frame().samples().rows() {
            for v in row {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()?;

    let labels: Vec<&[f64]> = frames.iter().map(|lf| lf.truth()).collect();
    fs::write(path.join(LABELS), serde_json::to_string(&labels)?)?;
    Ok(manifest)
}

pub(crate) fn check_version(value: &serde_json::Value, supported: u32) -> Result<()> {
    match value.get("format_version") {
        Some(serde_json::Value::Number(n)) if n.as_u64() == Some(supported as u64) => Ok(()),
        Some(serde_json::Value::String(s)) => Err(Error::Version {
            found: s.clone(),
            supported,
        }),
        Some(other) => Err(Error::Version {
            found: other.to_string(),
            supported,
        }),
        None => Err(Error::Format("manifest lacks format_version".into())),
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(path.join(MANIFEST))?)?;
    check_version(&raw, DATASET_FORMAT_VERSION)?;
    let manifest: DatasetManifest = serde_json::from_value(raw)?;

    let (nf, c, n) = (manifest.n_frames, manifest.channels, manifest.frame_length);
    let bytes = fs::read(path.join(FRAMES))?;
    let expected = nf * c * n * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "{FRAMES}: expected {expected} bytes for {nf} frames of {c}x{n} samples, found {}",
            bytes.len()
        )));
    }
    let labels: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(path.join(LABELS))?)?;
    if labels.len() != nf {
        return Err(Error::Format(format!(
            "{LABELS}: expected {nf} label sets, found {}",
            labels.len()
        )));
    }

    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let frames = floats
        .chunks_exact((c * n).max(1))
        .zip(labels)
        .map(|(chunk, truth)| {
            let samples = Array2::from_shape_vec((c, n), chunk.to_vec())
                .map_err(|e| Error::Format(e.to_string()))?;
            LabeledFrame::new(Frame::new(samples, manifest.sample_rate_hz)?, truth)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { manifest, frames })
}

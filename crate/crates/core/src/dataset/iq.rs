//! Adapter for externally captured baseband (I/Q) A-scans.
//!
//! Layout of an IQ directory:
//! - `iq.json`: `{"format_version": 1, "n_records", "record_length", "sample_rate_hz"}`
//! - `iq.f32`: little-endian float32, `[record][sample][I, Q]` interleaved
//! - `truth.json` (optional): one array of arrival positions per record, in
//!   native (pre-interpolation) samples

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::io::check_version;
use super::LabeledFrame;
use crate::error::{Error, Result};
use crate::signal::{resample_interp, Frame};

const IQ_FORMAT_VERSION: u32 = 1;

/// How interpolated I/Q data is presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    /// Two channels, (I, Q).
    Iq,
    /// One channel, `sqrt(I^2 + Q^2)`.
    #[default]
    Magnitude,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqManifest {
    pub format_version: u32,
    pub n_records: usize,
    pub record_length: usize,
    pub sample_rate_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IqRecord {
    pub i: Vec<f32>,
    pub q: Vec<f32>,
    pub truth: Vec<f64>,
}

/// Writes records in the adapter layout; `truth.json` is written only when
/// `with_truth` is set.
pub fn save_iq_records(
    path: &Path,
    records: &[IqRecord],
    sample_rate_hz: f64,
    with_truth: bool,
) -> Result<()> {
    let len = records.first().map_or(0, |r| r.i.len());
    if records.iter().any(|r| r.i.len() != len || r.q.len() != len) {
        return Err(Error::Shape("all I/Q records must share one length".into()));
    }
    fs::create_dir_all(path)?;
    let manifest = IqManifest {
        format_version: IQ_FORMAT_VERSION,
        n_records: records.len(),
        record_length: len,
        sample_rate_hz,
    };
    fs::write(path.join("iq.json"), serde_json::to_string_pretty(&manifest)?)?;
    let mut w = BufWriter::new(fs::File::create(path.join("iq.f32"))?);
    for r in records {
        for (i, q) in r.i.iter().zip(&r.q) {
            w.write_all(&i.to_le_bytes())?;
            w.write_all(&q.to_le_bytes())?;
        }
    }
    w.flush()?;
    if with_truth {
        let truth: Vec<&[f64]> = records.iter().map(|r| r.truth.as_slice()).collect();
        fs::write(path.join("truth.json"), serde_json::to_string(&truth)?)?;
    }
    Ok(())
}

/// Loads I/Q records, interpolates each channel by `interp_factor` and
/// rescales truth positions onto the interpolated grid.
///
/// A missing `truth.json` yields frames with empty labels.
pub fn load_iq_dataset(
    path: &Path,
    interp_factor: usize,
    mode: ChannelMode,
) -> Result<Vec<LabeledFrame>> {
    if interp_factor < 1 {
        return Err(Error::InvalidArgument("interp_factor must be >= 1".into()));
    }
    let raw: serde_json::Value = serde_json::from_str(&fs::read_to_string(path.join("iq.json"))?)?;
    check_version(&raw, IQ_FORMAT_VERSION)?;
    let manifest: IqManifest = serde_json::from_value(raw)?;
    let (nr, len) = (manifest.n_records, manifest.record_length);

    let bytes = fs::read(path.join("iq.f32"))?;
    let expected = nr * len * 2 * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "iq.f32: expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let truth_path = path.join("truth.json");
    let truth: Vec<Vec<f64>> = if truth_path.exists() {
        let t: Vec<Vec<f64>> = serde_json::from_str(&fs::read_to_string(truth_path)?)?;
        if t.len() != nr {
            return Err(Error::Format(format!(
                "truth.json: expected {nr} label sets, found {}",
                t.len()
            )));
        }
        t
    } else {
        log::warn!("{}: no truth.json, frames carry empty labels", path.display());
        vec![Vec::new(); nr]
    };

    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let out_len = len * interp_factor;
    let rate = manifest.sample_rate_hz * interp_factor as f64;

    floats
        .chunks_exact((2 * len).max(1))
        .zip(truth)
        .map(|(rec, labels)| {
            let i: Vec<f64> = rec.iter().step_by(2).map(|&v| v as f64).collect();
            let q: Vec<f64> = rec.iter().skip(1).step_by(2).map(|&v| v as f64).collect();
            let i = resample_interp(&i, interp_factor)?;
            let q = resample_interp(&q, interp_factor)?;
            let samples = match mode {
                ChannelMode::Iq => {
                    let data: Vec<f32> = i.iter().chain(q.iter()).map(|&v| v as f32).collect();
                    Array2::from_shape_vec((2, out_len), data)
                }
                ChannelMode::Magnitude => {
                    let data: Vec<f32> =
                        i.iter().zip(&q).map(|(a, b)| a.hypot(*b) as f32).collect();
                    Array2::from_shape_vec((1, out_len), data)
                }
            }
            .map_err(|e| Error::Format(e.to_string()))?;
            let labels = labels.iter().map(|p| p * interp_factor as f64).collect();
            LabeledFrame::new(Frame::new(samples, rate)?, labels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<IqRecord> {
        (0..3)
            .map(|r| IqRecord {
                i: (0..16).map(|k| ((k + r) as f32 * 0.3).cos()).collect(),
                q: (0..16).map(|k| ((k + r) as f32 * 0.3).sin()).collect(),
                truth: vec![2.5 + r as f64],
            })
            .collect()
    }

    #[test]
    fn factor_one_passes_samples_through() {
        let dir = tempfile::tempdir().unwrap();
        let recs = records();
        save_iq_records(dir.path(), &recs, 1e6, true).unwrap();
        let frames = load_iq_dataset(dir.path(), 1, ChannelMode::Iq).unwrap();
        assert_eq!(frames.len(), 3);
        for (lf, r) in frames.iter().zip(&recs) {
            assert_eq!(lf.frame().channel(0).to_vec(), r.i);
            assert_eq!(lf.frame().channel(1).to_vec(), r.q);
            assert_eq!(lf.truth(), r.truth.as_slice());
        }
    }

    #[test]
    fn interpolation_scales_length_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        save_iq_records(dir.path(), &records(), 1e6, true).unwrap();
        let frames = load_iq_dataset(dir.path(), 10, ChannelMode::Magnitude).unwrap();
        assert_eq!(frames[0].frame().len(), 160);
        assert_eq!(frames[0].frame().channels(), 1);
        assert_eq!(frames[0].frame().sample_rate_hz(), 1e7);
        let frames = load_iq_dataset(dir.path(), 20, ChannelMode::Iq).unwrap();
        assert_eq!(frames[1].truth(), &[3.5 * 20.0]);
        assert_eq!(frames[1].frame().len(), 320);
    }

    #[test]
    fn missing_truth_gives_empty_labels() {
        let dir = tempfile::tempdir().unwrap();
        save_iq_records(dir.path(), &records(), 1e6, false).unwrap();
        let frames = load_iq_dataset(dir.path(), 2, ChannelMode::Magnitude).unwrap();
        assert!(frames.iter().all(|lf| lf.truth().is_empty()));
    }

    #[test]
    fn blob_length_is_checked() {
        let dir = tempfile::tempdir().unwrap();
        save_iq_records(dir.path(), &records(), 1e6, true).unwrap();
        fs::write(dir.path().join("iq.f32"), [0u8; 12]).unwrap();
        assert!(matches!(
            load_iq_dataset(dir.path(), 1, ChannelMode::Iq),
            Err(Error::Format(_))
        ));
    }
}

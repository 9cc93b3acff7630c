use crate::error::{Error, Result};
use crate::signal::{convolve_same, gaussian_kernel};

/// Number of taps of the Gaussian that smooths the spike labels.
pub const LABEL_KERNEL_LEN: usize = 7;

/// Peak value of a scaled mask: `lambda0 = (max(g * y) / LABEL_PEAK)^-1`.
pub const LABEL_PEAK: f64 = 20.0;

/// Regression target on the upsampled `N * R` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetMask {
    pub values: Vec<f64>,
    pub lambda0: f64,
}

impl TargetMask {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Upsampled index of a truth position: `round(position * R)`, halves
/// rounded up, clamped to the last grid sample.
pub fn spike_index(position: f64, upsample: usize, grid_len: usize) -> usize {
    let idx = (position * upsample as f64 + 0.5).floor().max(0.0) as usize;
    idx.min(grid_len.saturating_sub(1))
}

/// Builds the Gaussian-smoothed, `lambda0`-scaled spike mask.
///
/// An empty label set gives an all-zero mask with `lambda0 = 1`.
pub fn make_target_mask(labels: &[f64], n: usize, upsample: usize, sigma: f64) -> Result<TargetMask> {
    if upsample < 1 {
        return Err(Error::InvalidArgument("upsampling factor must be >= 1".into()));
    }
    let len = n * upsample;
    if let Some(p) = labels.iter().find(|p| !(**p >= 0.0 && **p < n as f64)) {
        return Err(Error::InvalidInput(format!("label {p} outside [0, {n})")));
    }
    let mut spikes = vec![0.0f64; len];
    for &p in labels {
        let idx = spike_index(p, upsample, len);
        if spikes[idx] != 0.0 {
            return Err(Error::DuplicateSpike { index: idx });
        }
        spikes[idx] = 1.0;
    }
    if labels.is_empty() {
        return Ok(TargetMask {
            values: spikes,
            lambda0: 1.0,
        });
    }
    // grids shorter than the kernel use the longest odd length that fits
    let klen = if len >= LABEL_KERNEL_LEN {
        LABEL_KERNEL_LEN
    } else {
        len - (1 - len % 2)
    };
    let kernel = gaussian_kernel(sigma, klen)?;
    let smoothed = convolve_same(&spikes, &kernel)?;
    let peak = smoothed.iter().fold(0.0f64, |m, &v| m.max(v));
    let lambda0 = LABEL_PEAK / peak;
    Ok(TargetMask {
        values: smoothed.into_iter().map(|v| v * lambda0).collect(),
        lambda0,
    })
}

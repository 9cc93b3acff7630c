//! Labeled frames, synthetic pulse-echo generation, training targets,
//! augmentation and dataset persistence.

mod augment;
pub(crate) mod io;
mod iq;
mod mask;
mod synth;

pub use augment::random_crop_pad;
pub use io::{load_dataset, save_dataset, Dataset, DatasetManifest, DATASET_FORMAT_VERSION};
pub use iq::{load_iq_dataset, save_iq_records, ChannelMode, IqManifest, IqRecord};
pub use mask::{make_target_mask, spike_index, TargetMask, LABEL_KERNEL_LEN, LABEL_PEAK};
pub use synth::{gabor_pulse, generate_synthetic, SyntheticConfig};

use crate::error::{Error, Result};
use crate::signal::Frame;

/// A frame with ground-truth arrival positions in fractional input samples.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    frame: Frame,
    truth: Vec<f64>,
}

impl LabeledFrame {
    /// Positions must lie in `[0, N)`, be sorted ascending and pairwise
    /// distinct.
    pub fn new(frame: Frame, truth: Vec<f64>) -> Result<Self> {
        let n = frame.len() as f64;
        if let Some(p) = truth.iter().find(|p| !(p.is_finite() && **p >= 0.0 && **p < n)) {
            return Err(Error::InvalidInput(format!(
                "truth position {p} outside [0, {n})"
            )));
        }
        if truth.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(
                "truth positions must be strictly increasing".into(),
            ));
        }
        Ok(Self { frame, truth })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn truth(&self) -> &[f64] {
        &self.truth
    }

    pub fn into_parts(self) -> (Frame, Vec<f64>) {
        (self.frame, self.truth)
    }

    pub(crate) fn from_parts_unchecked(frame: Frame, truth: Vec<f64>) -> Self {
        Self { frame, truth }
    }
}

/// Deterministic 90/10 train/validation split by frame index: the last
/// `ceil(n / 10)` frames form the validation part.
pub fn split_train_val<T>(items: &[T]) -> (&[T], &[T]) {
    let n = items.len();
    let n_val = if n < 2 { 0 } else { n.div_ceil(10) };
    items.split_at(n - n_val)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(n: usize) -> Frame {
        Frame::mono(vec![0.0; n], 1.0).unwrap()
    }

    #[test]
    fn labeled_frame_validates_positions() {
        assert!(LabeledFrame::new(frame(10), vec![0.0, 3.5, 9.99]).is_ok());
        assert!(LabeledFrame::new(frame(10), vec![10.0]).is_err());
        assert!(LabeledFrame::new(frame(10), vec![-0.1]).is_err());
        assert!(LabeledFrame::new(frame(10), vec![4.0, 2.0]).is_err());
        assert!(LabeledFrame::new(frame(10), vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn split_is_ninety_ten() {
        let v: Vec<usize> = (0..2000).collect();
        let (t, val) = split_train_val(&v);
        assert_eq!(t.len(), 1800);
        assert_eq!(val.len(), 200);
        assert_eq!(val[0], 1800);
        let v: Vec<usize> = (0..5).collect();
        assert_eq!(split_train_val(&v).1.len(), 1);
        let one = [1];
        assert_eq!(split_train_val(&one).1.len(), 0);
    }
}

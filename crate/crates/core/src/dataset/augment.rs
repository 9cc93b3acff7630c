use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::LabeledFrame;

/// Keeps a random contiguous window of `3N/4` samples and zeroes everything
/// outside it in place, so absolute sample coordinates are unchanged. Labels
/// outside the window are dropped.
pub fn random_crop_pad(lf: &LabeledFrame, seed: u64) -> LabeledFrame {
    let n = lf.frame().len();
    let keep = 3 * n / 4;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rng.random_range(0..=n - keep);
    let end = start + keep;

    let mut frame = lf.frame().clone();
    for mut row in frame.samples_mut().rows_mut() {
        for (i, v) in row.iter_mut().enumerate() {
            if i < start || i >= end {
                *v = 0.0;
            }
        }
    }
    let truth = lf
        .truth()
        .iter()
        .copied()
        .filter(|&p| p >= start as f64 && p < end as f64)
        .collect();
    LabeledFrame::from_parts_unchecked(frame, truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Frame;

    fn ramp(n: usize, truth: Vec<f64>) -> LabeledFrame {
        let f = Frame::mono((1..=n).map(|i| i as f32).collect(), 1.0).unwrap();
        LabeledFrame::new(f, truth).unwrap()
    }

    #[test]
    fn keeps_three_quarters() {
        let lf = ramp(1024, vec![]);
        for seed in 0..20 {
            let out = random_crop_pad(&lf, seed);
            assert_eq!(out.frame().len(), 1024);
            let kept = out.frame().channel(0).iter().filter(|&&v| v != 0.0).count();
            assert_eq!(kept, 768);
            // retained samples are untouched and contiguous
            let first = out.frame().channel(0).iter().position(|&v| v != 0.0).unwrap();
            for i in first..first + 768 {
                assert_eq!(out.frame().channel(0)[i], (i + 1) as f32);
            }
        }
    }

    #[test]
    fn labels_inside_window_survive() {
        // the middle half is inside every possible window
        let lf = ramp(1024, vec![10.0, 300.5, 700.25, 1020.0]);
        for seed in 0..20 {
            let out = random_crop_pad(&lf, seed);
            assert!(out.truth().contains(&300.5));
            assert!(out.truth().contains(&700.25));
            let first = out.frame().channel(0).iter().position(|&v| v != 0.0).unwrap() as f64;
            for p in out.truth() {
                assert!(*p >= first && *p < first + 768.0);
            }
        }
    }

    #[test]
    fn deterministic_window() {
        let lf = ramp(256, vec![50.0]);
        assert_eq!(random_crop_pad(&lf, 9), random_crop_pad(&lf, 9));
    }
}

//! Classical arrival-time estimators used as comparison anchors.

use crate::dataset::{gabor_pulse, SyntheticConfig};
use crate::detection::{Detection, Detector};
use crate::error::{Error, Result};
use crate::signal::{envelope, Frame};

/// Tags accepted wherever a baseline can stand in for a model.
pub const BASELINE_TAGS: [&str; 3] = ["gradient", "threshold", "xcorr"];

pub const DEFAULT_GRADIENT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_CROSSING_THRESHOLD: f64 = 0.5;

/// Vertex offset of the parabola through `(-1, yl), (0, yc), (1, yr)`.
/// A flat triple gives 0.
pub fn parabolic_offset(yl: f64, yc: f64, yr: f64) -> f64 {
    let denom = yl - 2.0 * yc + yr;
    if denom == 0.0 {
        return 0.0;
    }
    (yl - yr) / (2.0 * denom)
}

fn check_rel(rel_threshold: f64) -> Result<()> {
    if !(rel_threshold > 0.0 && rel_threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relative threshold {rel_threshold} outside (0, 1]"
        )));
    }
    Ok(())
}

fn refine(y: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= y.len() {
        return i as f64;
    }
    let d = parabolic_offset(y[i - 1], y[i], y[i + 1]).clamp(-0.5, 0.5);
    i as f64 + d
}

/// Peaks of the envelope found as `+ -> -` sign changes of its first
/// difference, kept when at least `rel_threshold * max(envelope)` and
/// refined by a parabola through the three samples around each peak.
pub fn gradient_peak_detect(frame: &Frame, rel_threshold: f64) -> Result<Vec<Detection>> {
    check_rel(rel_threshold)?;
    let env = envelope(frame)?;
    let max = env.iter().fold(0.0f64, |m, &v| m.max(v));
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let floor = rel_threshold * max;
    let mut out = Vec::new();
    // start of the most recent run of non-negative differences after a rise
    let mut rising_to: Option<usize> = None;
    for i in 1..env.len() {
        let d = env[i] - env[i - 1];
        if d > 0.0 {
            rising_to = Some(i);
        } else if d < 0.0 {
            if let Some(p) = rising_to.take() {
                if env[p] >= floor {
                    out.push(Detection {
                        position: refine(&env, p),
                        confidence: env[p],
                    });
                }
            }
        }
    }
    Ok(out)
}

/// First upward crossing of `rel_threshold * max(envelope)`, linearly
/// interpolated between the bracketing samples. `None` for an all-zero
/// frame.
pub fn threshold_first_crossing(frame: &Frame, rel_threshold: f64) -> Result<Option<Detection>> {
    check_rel(rel_threshold)?;
    let env = envelope(frame)?;
    Ok(first_crossing(&env, rel_threshold))
}

fn first_crossing(env: &[f64], rel_threshold: f64) -> Option<Detection> {
    let max = env.iter().fold(0.0f64, |m, &v| m.max(v));
    if max == 0.0 {
        return None;
    }
    let level = rel_threshold * max;
    let i = env.iter().position(|&v| v >= level)?;
    let position = if i == 0 {
        0.0
    } else {
        let (a, b) = (env[i - 1], env[i]);
        (i - 1) as f64 + (level - a) / (b - a)
    };
    Some(Detection {
        position,
        confidence: env[i],
    })
}

/// Lag of the maximum of the normalized cross-correlation between frame
/// and template over all lags `0..=N-L`, refined parabolically.
///
/// The returned position is the lag, i.e. where the template's first
/// sample aligns. Multi-channel frames sum the per-channel correlations.
pub fn xcorr_toa(frame: &Frame, template: &[f64]) -> Result<Detection> {
    let l = template.len();
    let n = frame.len();
    let energy: f64 = template.iter().map(|v| v * v).sum();
    if l == 0 || energy == 0.0 {
        return Err(Error::InvalidArgument("template has zero energy".into()));
    }
    if l > n {
        return Err(Error::InvalidArgument(format!(
            "template of {l} samples is longer than the frame ({n})"
        )));
    }
    let channels: Vec<Vec<f64>> = (0..frame.channels())
        .map(|c| frame.channel(c).iter().map(|&v| v as f64).collect())
        .collect();
    let frame_energy: f64 = channels.iter().flatten().map(|v| v * v).sum();
    let norm = (energy * frame_energy).sqrt();
    let norm = if norm > 0.0 { norm } else { 1.0 };
    let corr: Vec<f64> = (0..=n - l)
        .map(|lag| {
            channels
                .iter()
                .map(|x| x[lag..lag + l].iter().zip(template).map(|(a, b)| a * b).sum::<f64>())
                .sum::<f64>()
                / norm
        })
        .collect();
    let (best, peak) = corr
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(Detection {
        position: refine(&corr, best),
        confidence: peak,
    })
}

/// Zero-phase pulse of the generator configuration, truncated to
/// `2 * margin + 1` samples and centred.
pub fn nominal_template(config: &SyntheticConfig) -> Vec<f64> {
    let half = config.margin() as usize;
    gabor_pulse(
        2 * half + 1,
        half as f64,
        1.0,
        0.0,
        config.center_frequency,
        config.bandwidth,
    )
}

#[derive(Debug, Clone)]
pub struct GradientBaseline {
    pub rel_threshold: f64,
}

#[derive(Debug, Clone)]
pub struct ThresholdBaseline {
    pub rel_threshold: f64,
}

/// Matched filter reporting the template centre: `lag + (L - 1) / 2`.
#[derive(Debug, Clone)]
pub struct XcorrBaseline {
    pub template: Vec<f64>,
}

impl Detector for GradientBaseline {
    fn name(&self) -> &str {
        "gradient"
    }

    fn weights(&self) -> Option<usize> {
        None
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>> {
        gradient_peak_detect(frame, self.rel_threshold)
    }
}

impl Detector for ThresholdBaseline {
    fn name(&self) -> &str {
        "threshold"
    }

    fn weights(&self) -> Option<usize> {
        None
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>> {
        Ok(threshold_first_crossing(frame, self.rel_threshold)?.into_iter().collect())
    }
}

impl Detector for XcorrBaseline {
    fn name(&self) -> &str {
        "xcorr"
    }

    fn weights(&self) -> Option<usize> {
        None
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>> {
        let mut d = xcorr_toa(frame, &self.template)?;
        d.position += (self.template.len() - 1) as f64 / 2.0;
        Ok(vec![d])
    }
}

/// Baseline detector for a tag of [`BASELINE_TAGS`] with default
/// parameters; `generator` supplies the xcorr template.
pub fn baseline_by_tag(tag: &str, generator: Option<&SyntheticConfig>) -> Option<Box<dyn Detector>> {
    match tag {
        "gradient" => Some(Box::new(GradientBaseline {
            rel_threshold: DEFAULT_GRADIENT_THRESHOLD,
        })),
        "threshold" => Some(Box::new(ThresholdBaseline {
            rel_threshold: DEFAULT_CROSSING_THRESHOLD,
        })),
        "xcorr" => {
            let config = generator.cloned().unwrap_or_default();
            Some(Box::new(XcorrBaseline {
                template: nominal_template(&config),
            }))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::generate_synthetic;
    use proptest::prelude::*;

    fn mono(v: Vec<f64>) -> Frame {
        Frame::mono(v.into_iter().map(|x| x as f32).collect(), 1.0).unwrap()
    }

    #[test]
    fn parabola_examples() {
        assert!((parabolic_offset(0.6, 1.0, 0.9) - 0.3).abs() < 1e-12);
        assert_eq!(parabolic_offset(1.0, 1.0, 1.0), 0.0);
    }

    #[test]
    fn crossing_examples() {
        let d = first_crossing(&[0.0, 0.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(d.position, 1.5);
        let d = first_crossing(&[0.0, 0.5, 1.0], 0.5).unwrap();
        assert_eq!(d.position, 1.0);
        assert!(threshold_first_crossing(&mono(vec![0.0; 16]), 0.5).unwrap().is_none());
        assert!(threshold_first_crossing(&mono(vec![0.0; 16]), 0.0).is_err());
    }

    #[test]
    fn gradient_on_clean_echo_matches_dense_envelope() {
        let cfg = SyntheticConfig {
            n_frames: 10,
            frame_length: 512,
            echoes_min: 1,
            echoes_max: 1,
            snr_db: f64::INFINITY,
            seed: 8,
            ..Default::default()
        };
        for lf in generate_synthetic(&cfg).unwrap() {
            let env = envelope(lf.frame()).unwrap();
            let argmax = env
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            let dets = gradient_peak_detect(lf.frame(), 0.25).unwrap();
            assert!(!dets.is_empty());
            let best = dets.iter().max_by(|a, b| a.confidence.total_cmp(&b.confidence)).unwrap();
            assert!((best.position - argmax as f64).abs() <= 1.0);
            assert_eq!(dets, gradient_peak_detect(lf.frame(), 0.25).unwrap());
        }
    }

    #[test]
    fn monotone_ramp_has_no_peak() {
        // two channels are read as I/Q, so the envelope is the ramp itself
        let ramp: Vec<f32> = (0..32).map(|i| i as f32).collect();
        let mut data = ramp.clone();
        data.extend(vec![0.0f32; 32]);
        let frame = Frame::new(ndarray::Array2::from_shape_vec((2, 32), data).unwrap(), 1.0).unwrap();
        assert!(gradient_peak_detect(&frame, 0.1).unwrap().is_empty());
    }

    #[test]
    fn xcorr_examples() {
        let mut x = vec![0.0; 40];
        x[17] = 2.0;
        x[3] = 1.0;
        assert_eq!(xcorr_toa(&mono(x), &[1.0]).unwrap().position, 17.0);

        let template = gabor_pulse(25, 12.0, 1.0, 0.0, 0.1, 0.04);
        for d in [0usize, 7, 40, 75] {
            let mut x = vec![0.0; 100];
            x[d..d + 25].copy_from_slice(&template);
            let p = xcorr_toa(&mono(x), &template).unwrap().position;
            assert!((p - d as f64).abs() <= 0.05, "{p} vs {d}");
        }
        assert!(xcorr_toa(&mono(vec![1.0; 8]), &[0.0, 0.0]).is_err());
        assert!(xcorr_toa(&mono(vec![1.0; 2]), &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn tags_resolve() {
        for tag in BASELINE_TAGS {
            assert_eq!(baseline_by_tag(tag, None).unwrap().name(), tag);
        }
        assert!(baseline_by_tag("nope", None).is_none());
    }

    proptest! {
        #[test]
        fn xcorr_is_shift_covariant(
            pulse in proptest::collection::vec(-1.0f64..1.0, 5..12),
            at in 20usize..40,
            d in 0usize..30,
        ) {
            prop_assume!(pulse.iter().any(|v| v.abs() > 0.1));
            let place = |p: usize| {
                let mut x = vec![0.0; 100];
                x[p..p + pulse.len()].copy_from_slice(&pulse);
                mono(x)
            };
            let t: Vec<f64> = pulse.iter().map(|v| (*v as f32) as f64).collect();
            let a = xcorr_toa(&place(at), &t).unwrap().position;
            let b = xcorr_toa(&place(at + d), &t).unwrap().position;
            prop_assert!((b - a - d as f64).abs() < 1e-9);
        }

        #[test]
        fn refinement_stays_within_half_sample(yl in -5.0f64..5.0, yr in -5.0f64..5.0, lift in 1e-3f64..5.0) {
            let yc = yl.max(yr) + lift;
            let d = parabolic_offset(yl, yc, yr);
            prop_assert!(d > -0.5 && d < 0.5);
        }
    }
}

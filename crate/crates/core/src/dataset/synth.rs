use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::LabeledFrame;
use crate::error::{Error, Result};
use crate::seed;
use crate::signal::{add_noise_snr, Frame};

/// Parameters of the synthetic pulse-echo generator.
///
/// Each echo is a Gabor pulse `a * exp(-t^2 / (2 s^2)) * cos(2 pi f0 t + phi)`
/// centred on its truth position, where `s = 1 / (2 pi bandwidth)` and
/// frequencies are fractions of the sample rate. With `random_phase` the
/// carrier phase `phi` of every echo is drawn uniformly, modelling the
/// phase shift a reflector imposes; the truth position is always the
/// envelope centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_frames: usize,
    pub frame_length: usize,
    pub echoes_min: usize,
    pub echoes_max: usize,
    pub center_frequency: f64,
    pub bandwidth: f64,
    pub amplitude_min: f64,
    pub amplitude_max: f64,
    pub min_separation: f64,
    /// `+inf` disables noise; serialized as the string `"inf"`.
    #[serde(with = "snr_serde")]
    pub snr_db: f64,
    pub seed: u64,
    pub sample_rate_hz: f64,
    pub random_phase: bool,
    /// Frame lengths must be divisible by this (the model's contraction
    /// factor `S`).
    pub length_multiple: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_frames: 100,
            frame_length: 1024,
            echoes_min: 1,
            echoes_max: 3,
            center_frequency: 0.1,
            bandwidth: 0.04,
            amplitude_min: 0.3,
            amplitude_max: 1.0,
            min_separation: 32.0,
            snr_db: 30.0,
            seed: 0,
            sample_rate_hz: 1.0e6,
            random_phase: true,
            length_multiple: 4,
        }
    }
}

impl SyntheticConfig {
    /// Envelope standard deviation of one pulse, in samples.
    pub fn pulse_sigma(&self) -> f64 {
        1.0 / (2.0 * PI * self.bandwidth)
    }

    /// Distance from the frame borders that echo centres keep, so that
    /// every pulse is fully contained in the frame.
    pub fn margin(&self) -> f64 {
        (3.0 * self.pulse_sigma()).ceil()
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.frame_length == 0 {
            return fail("frame_length must be positive".into());
        }
        if self.length_multiple == 0 || self.frame_length % self.length_multiple != 0 {
            return fail(format!(
                "frame_length {} is not divisible by {}",
                self.frame_length, self.length_multiple
            ));
        }
        if self.echoes_min > self.echoes_max {
            return fail("echoes_min exceeds echoes_max".into());
        }
        if !(self.min_separation >= 1.0) {
            return fail("min_separation must be >= 1 sample".into());
        }
        if !(self.center_frequency > 0.0 && self.center_frequency < 0.5) {
            return fail("center_frequency must lie in (0, 0.5)".into());
        }
        if !(self.bandwidth > 0.0) {
            return fail("bandwidth must be positive".into());
        }
        if !(self.amplitude_min > 0.0
            && self.amplitude_min <= self.amplitude_max
            && self.amplitude_max <= 1.0)
        {
            return fail("amplitude range must satisfy 0 < min <= max <= 1".into());
        }
        if !(self.sample_rate_hz > 0.0) {
            return fail("sample_rate_hz must be positive".into());
        }
        if self.snr_db.is_nan() {
            return fail("snr_db is NaN".into());
        }
        if self.echoes_max > 0 {
            let needed = (self.echoes_max - 1) as f64 * self.min_separation;
            if needed > self.span() {
                return fail(format!(
                    "{} echoes separated by {} samples do not fit in a frame of {} samples",
                    self.echoes_max, self.min_separation, self.frame_length
                ));
            }
        }
        Ok(())
    }

    fn span(&self) -> f64 {
        self.frame_length as f64 - 1.0 - 2.0 * self.margin()
    }

    /// Seed of frame `index`: child stream `index` of the master seed.
    pub fn frame_seed(&self, index: usize) -> u64 {
        seed::derive(self.seed, index as u64)
    }
}

mod snr_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Number(*v).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid snr_db {t:?}"))),
        }
    }
}

/// Gabor pulse centred at `position`, evaluated at integer sample times.
pub fn gabor_pulse(
    len: usize,
    position: f64,
    amplitude: f64,
    phase: f64,
    center_frequency: f64,
    bandwidth: f64,
) -> Vec<f64> {
    let sigma = 1.0 / (2.0 * PI * bandwidth);
    (0..len)
        .map(|i| {
            let t = i as f64 - position;
            amplitude
                * (-t * t / (2.0 * sigma * sigma)).exp()
                * (2.0 * PI * center_frequency * t + phase).cos()
        })
        .collect()
}

/// Generates `config.n_frames` labeled frames.
///
/// Frame `i` draws everything from its own seed ([`SyntheticConfig::frame_seed`]),
/// so frames can be produced in parallel and in any order.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<LabeledFrame>> {
    config.validate()?;
    (0..config.n_frames)
        .into_par_iter()
        .map(|i| generate_frame(config, config.frame_seed(i)))
        .collect()
}

fn generate_frame(config: &SyntheticConfig, frame_seed: u64) -> Result<LabeledFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(frame_seed);
    let n = config.frame_length;
    let k = rng.random_range(config.echoes_min..=config.echoes_max);

    // uniform over all admissible configurations: draw k points in the
    // reduced span, sort, then re-insert the separations
    let free = config.span() - k.saturating_sub(1) as f64 * config.min_separation;
    let mut offsets: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * free).collect();
    offsets.sort_by(f64::total_cmp);
    let truth: Vec<f64> = offsets
        .iter()
        .enumerate()
        .map(|(i, u)| config.margin() + u + i as f64 * config.min_separation)
        .collect();

    let mut signal = vec![0.0f64; n];
    for &p in &truth {
        let amp = rng.random_range(config.amplitude_min..=config.amplitude_max);
        let phase = if config.random_phase {
            rng.random::<f64>() * 2.0 * PI
        } else {
            0.0
        };
        let pulse = gabor_pulse(n, p, amp, phase, config.center_frequency, config.bandwidth);
        signal.iter_mut().zip(pulse).for_each(|(s, v)| *s += v);
    }

    let noise_seed = seed::derive(frame_seed, u64::MAX);
    let clean = Frame::mono(signal.iter().map(|&v| v as f32).collect(), config.sample_rate_hz)?;
    let frame = if truth.is_empty() {
        // no echo to reference: use the noise floor of a unit pulse
        let reference = gabor_pulse(
            n,
            n as f64 / 2.0,
            1.0,
            0.0,
            config.center_frequency,
            config.bandwidth,
        );
        let reference = Frame::mono(reference.iter().map(|&v| v as f32).collect(), 1.0)?;
        let floor = add_noise_snr(&reference, config.snr_db, noise_seed)?;
        let noise: Vec<f32> = floor
            .channel(0)
            .iter()
            .zip(reference.channel(0).iter())
            .map(|(a, b)| a - b)
            .collect();
        Frame::mono(noise, config.sample_rate_hz)?
    } else {
        add_noise_snr(&clean, config.snr_db, noise_seed)?
    };
    Ok(LabeledFrame::from_parts_unchecked(frame, truth))
}

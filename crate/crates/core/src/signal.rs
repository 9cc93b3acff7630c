//! Deterministic 1-D signal primitives: amplitude normalization, noise
//! injection, band-limited interpolation, Gaussian kernels, "same"
//! convolution and envelope extraction.
//!
//! Every function here is pure; seeded randomness is derived from the
//! caller's seed only.

use ndarray::{Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

/// One captured signal of `N` samples and `C` channels.
///
/// Samples are stored channel-major, shape `(C, N)`, matching the on-disk
/// `[channel][sample]` order.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    samples: Array2<f32>,
    sample_rate_hz: f64,
}

impl Frame {
    pub fn new(samples: Array2<f32>, sample_rate_hz: f64) -> Result<Self> {
        let (channels, len) = samples.dim();
        if channels == 0 || len == 0 {
            return Err(Error::InvalidInput(format!(
                "frame must have at least one channel and one sample, got {channels}x{len}"
            )));
        }
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("frame contains non-finite samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn mono(samples: Vec<f32>, sample_rate_hz: f64) -> Result<Self> {
        let n = samples.len();
        let arr = Array2::from_shape_vec((1, n), samples)
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(arr, sample_rate_hz)
    }

    /// Number of samples per channel (`N`).
    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of channels (`C`).
    pub fn channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &Array2<f32> {
        &self.samples
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, f32> {
        self.samples.index_axis(Axis(0), c)
    }

    /// Mutable access for in-place edits. Callers are responsible for
    /// keeping samples finite.
    pub fn samples_mut(&mut self) -> &mut Array2<f32> {
        &mut self.samples
    }

    pub fn into_samples(self) -> Array2<f32> {
        self.samples
    }

    fn power(&self) -> f64 {
        let n = self.samples.len() as f64;
        self.samples.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>() / n
    }
}

/// Result of [`normalize_amplitude`].
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub frame: Frame,
    /// Set when the input was all-zero and was returned unchanged.
    pub zero_frame: bool,
}

/// Scales a frame so that `max |x| = 1` over all channels.
pub fn normalize_amplitude(frame: &Frame) -> Result<Normalized> {
    if frame.samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("frame contains non-finite samples".into()));
    }
    let peak = frame.samples.iter().fold(0.0f32, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        log::warn!("normalize_amplitude: all-zero frame left unchanged");
        return Ok(Normalized {
            frame: frame.clone(),
            zero_frame: true,
        });
    }
    let samples = frame.samples.mapv(|v| v / peak);
    Ok(Normalized {
        frame: Frame {
            samples,
            sample_rate_hz: frame.sample_rate_hz,
        },
        zero_frame: false,
    })
}

/// Adds white Gaussian noise so that the output has the requested SNR with
/// respect to the frame's mean power (all channels pooled).
///
/// `snr_db = +inf` disables the noise and returns the frame unchanged.
pub fn add_noise_snr(frame: &Frame, snr_db: f64, seed: u64) -> Result<Frame> {
    if snr_db == f64::INFINITY {
        return Ok(frame.clone());
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("snr_db is NaN".into()));
    }
    let power = frame.power();
    if power == 0.0 {
        return Err(Error::UndefinedSnr);
    }
    let noise_rms = power.sqrt() * 10f64.powf(-snr_db / 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = frame.samples.mapv(|v| {
        let n: f64 = StandardNormal.sample(&mut rng);
        (v as f64 + noise_rms * n) as f32
    });
    Ok(Frame {
        samples,
        sample_rate_hz: frame.sample_rate_hz,
    })
}

const INTERP_TAPS_PER_PHASE: usize = 8;

/// Integer-factor band-limited interpolation.
///
/// Polyphase windowed-sinc low-pass, 8 taps per phase, Hann window. Each
/// phase is normalized to unit DC gain, and phase 0 reproduces the input
/// samples exactly. Samples outside the signal are treated as zero.
pub fn resample_interp(signal: &[f64], factor: usize) -> Result<Vec<f64>> {
    if factor < 1 {
        return Err(Error::InvalidArgument(format!(
            "interpolation factor must be >= 1, got {factor}"
        )));
    }
    if factor == 1 {
        return Ok(signal.to_vec());
    }
    let half = (INTERP_TAPS_PER_PHASE / 2) as isize;
    let phases: Vec<Vec<f64>> = (0..factor)
        .map(|p| {
            let frac = p as f64 / factor as f64;
            // taps cover input offsets -half+1 ..= half relative to floor(t)
            let mut taps: Vec<f64> = (-half + 1..=half)
                .map(|k| {
                    let u = frac - k as f64;
                    sinc(u) * hann(u, half as f64)
                })
                .collect();
            let sum: f64 = taps.iter().sum();
            taps.iter_mut().for_each(|t| *t /= sum);
            taps
        })
        .collect();

    let n = signal.len() as isize;
    let mut out = Vec::with_capacity(signal.len() * factor);
    for m in 0..n {
        for taps in &phases {
            let mut acc = 0.0;
            for (j, k) in (-half + 1..=half).enumerate() {
                let idx = m + k;
                if (0..n).contains(&idx) {
                    acc += taps[j] * signal[idx as usize];
                }
            }
            out.push(acc);
        }
    }
    Ok(out)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

fn hann(u: f64, half_width: f64) -> f64 {
    if u.abs() >= half_width {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * u / half_width).cos())
    }
}

/// Odd-length, symmetric, unit-sum smoothing kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    taps: Vec<f64>,
    sigma: f64,
}

impl Kernel1D {
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn center(&self) -> usize {
        self.taps.len() / 2
    }
}

/// Sampled Gaussian `exp(-(k-c)^2 / (2 sigma^2))`, normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, length: usize) -> Result<Kernel1D> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    if length % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "kernel length must be odd, got {length}"
        )));
    }
    let c = (length / 2) as f64;
    let mut taps: Vec<f64> = (0..length)
        .map(|k| {
            let d = k as f64 - c;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    Ok(Kernel1D { taps, sigma })
}

/// Same-length convolution with zero-padded borders.
pub fn convolve_same(signal: &[f64], kernel: &Kernel1D) -> Result<Vec<f64>> {
    if kernel.len() > signal.len() {
        return Err(Error::InvalidArgument(format!(
            "kernel of length {} exceeds signal of length {}",
            kernel.len(),
            signal.len()
        )));
    }
    let n = signal.len() as isize;
    let c = kernel.center() as isize;
    let out = (0..n)
        .map(|i| {
            kernel
                .taps
                .iter()
                .enumerate()
                .filter_map(|(k, &t)| {
                    let j = i - (k as isize - c);
                    (0..n).contains(&j).then(|| t * signal[j as usize])
                })
                .sum()
        })
        .collect();
    Ok(out)
}

/// Analytic signal `x + j H{x}` computed with the FFT.
pub fn analytic_signal(signal: &[f64]) -> Vec<Complex<f64>> {
    let n = signal.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    // one-sided spectrum: keep DC (and Nyquist for even n), double positives
    let half = n / 2;
    for (k, v) in buf.iter_mut().enumerate() {
        let gain = if k == 0 || (n % 2 == 0 && k == half) {
            1.0
        } else if k <= (n - 1) / 2 {
            2.0
        } else {
            0.0
        };
        *v *= gain;
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Instantaneous amplitude.
///
/// Two channels are read as (I, Q) and combined as `sqrt(I^2 + Q^2)`; a
/// single channel uses the magnitude of its analytic signal.
pub fn envelope(frame: &Frame) -> Result<Vec<f64>> {
    match frame.channels() {
        1 => {
            let x: Vec<f64> = frame.channel(0).iter().map(|&v| v as f64).collect();
            Ok(analytic_signal(&x).iter().map(|z| z.norm()).collect())
        }
        2 => {
            let i = frame.channel(0);
            let q = frame.channel(1);
            Ok(i.iter()
                .zip(q.iter())
                .map(|(&a, &b)| (a as f64).hypot(b as f64))
                .collect())
        }
        c => Err(Error::InvalidArgument(format!(
            "envelope supports 1 (RF) or 2 (I/Q) channels, got {c}"
        ))),
    }
}

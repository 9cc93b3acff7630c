//! Turning score sequences into arrival estimates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::match_detections;
use crate::model::Network;
use crate::signal::{normalize_amplitude, Frame};

/// Default suppression radius in upsampled samples, the support of the
/// label smoothing kernel.
pub const DEFAULT_NMS_WINDOW: usize = 7;

/// Number of candidates in the threshold grid of [`threshold_candidates`].
pub const THRESHOLD_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Position in input samples.
    pub position: f64,
    pub confidence: f64,
}

/// Result of [`detect_single`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleDetection {
    pub detection: Detection,
    /// All scores were equal, so the position carries no information.
    pub degenerate: bool,
}

/// Global maximum of the scores, ties toward the lowest index.
pub fn detect_single(scores: &[f64], upsample: usize) -> Result<SingleDetection> {
    let first = *scores
        .first()
        .ok_or_else(|| Error::InvalidInput("empty score sequence".into()))?;
    let (index, best) = scores
        .iter()
        .enumerate()
        .fold((0, first), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(SingleDetection {
        detection: Detection {
            position: index as f64 / upsample as f64,
            confidence: best,
        },
        degenerate: scores.iter().all(|&v| v == first),
    })
}

/// A kept NMS peak in upsampled coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub index: usize,
    pub score: f64,
}

/// Indices `i` with `s[i] > s[i-1]` and `s[i] >= s[i+1]`; samples beyond the
/// borders count as `-inf`. Of a plateau only the leftmost sample qualifies.
pub fn local_maxima(scores: &[f64]) -> Vec<usize> {
    (0..scores.len())
        .filter(|&i| {
            let left = i == 0 || scores[i] > scores[i - 1];
            let right = i + 1 == scores.len() || scores[i] >= scores[i + 1];
            left && right
        })
        .collect()
}

/// Thresholded 1-D non-maximum suppression.
///
/// Local maxima with score `>= threshold` are visited by descending score
/// (ties toward the lower index); a candidate is kept unless it lies within
/// `window` samples of an already kept peak. The result is sorted by index.
/// `usize::MAX` as window keeps only the top peak.
pub fn nms_1d(scores: &[f64], threshold: f64, window: usize) -> Vec<Peak> {
    let mut candidates: Vec<usize> = local_maxima(scores)
        .into_iter()
        .filter(|&i| scores[i] >= threshold)
        .collect();
    candidates.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut suppressed = vec![false; scores.len()];
    let mut kept = Vec::new();
    for i in candidates {
        if suppressed[i] {
            continue;
        }
        kept.push(Peak {
            index: i,
            score: scores[i],
        });
        let lo = i.saturating_sub(window);
        let hi = i.saturating_add(window).min(scores.len() - 1);
        suppressed[lo..=hi].iter_mut().for_each(|s| *s = true);
    }
    kept.sort_by_key(|p| p.index);
    kept
}

/// [`nms_1d`] with positions converted to input samples.
pub fn detect_multi(scores: &[f64], upsample: usize, threshold: f64, window: usize) -> Vec<Detection> {
    nms_1d(scores, threshold, window)
        .into_iter()
        .map(|p| Detection {
            position: p.index as f64 / upsample as f64,
            confidence: p.score,
        })
        .collect()
}

/// Up to `count` quantiles (ascending, deduplicated) of the decisive peak
/// scores of a validation set: for a frame with `k` labels, the scores of
/// its `k + 1` strongest NMS peaks. These are the values at which the
/// frame's echoes get detected and its first false alarm appears; the many
/// low noise maxima of a score sequence are left out.
pub fn threshold_candidates(
    val_scores: &[Vec<f64>],
    val_truth: &[Vec<f64>],
    window: usize,
    count: usize,
) -> Vec<f64> {
    let mut pooled: Vec<f64> = val_scores
        .iter()
        .zip(val_truth)
        .flat_map(|(s, t)| {
            let mut peaks: Vec<f64> = nms_1d(s, f64::NEG_INFINITY, window)
                .into_iter()
                .map(|p| p.score)
                .collect();
            peaks.sort_by(|a, b| b.total_cmp(a));
            peaks.truncate(t.len() + 1);
            peaks
        })
        .collect();
    if pooled.is_empty() || count == 0 {
        return Vec::new();
    }
    pooled.sort_by(f64::total_cmp);
    let m = pooled.len();
    let mut grid: Vec<f64> = (0..count)
        .map(|k| {
            let pos = if count == 1 { 0 } else { (k * (m - 1) + (count - 1) / 2) / (count - 1) };
            pooled[pos]
        })
        .collect();
    grid.dedup();
    grid
}

/// Rates of one candidate threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdScore {
    pub threshold: f64,
    pub tpr: f64,
    /// `FP / (TP + FP)`, 0 when nothing was detected.
    pub far: f64,
    pub g_mean: f64,
}

impl ThresholdScore {
    pub fn from_counts(threshold: f64, tp: usize, fp: usize, fn_: usize) -> Self {
        let tpr = tp as f64 / (tp + fn_) as f64;
        let far = if tp + fp == 0 { 0.0 } else { fp as f64 / (tp + fp) as f64 };
        Self {
            threshold,
            tpr,
            far,
            g_mean: (tpr * (1.0 - far)).sqrt(),
        }
    }
}

/// Picks the candidate maximizing `sqrt(TPR * (1 - FAR))` on a validation
/// set; the earliest candidate wins ties.
///
/// `val_scores` are upsampled score sequences, `val_truth` positions in
/// input samples.
pub fn select_threshold_gmeans(
    val_scores: &[Vec<f64>],
    val_truth: &[Vec<f64>],
    upsample: usize,
    tau: f64,
    window: usize,
    candidates: &[f64],
) -> Result<ThresholdScore> {
    if val_scores.len() != val_truth.len() {
        return Err(Error::Shape(format!(
            "{} score sequences for {} label sets",
            val_scores.len(),
            val_truth.len()
        )));
    }
    if val_truth.iter().all(|t| t.is_empty()) {
        return Err(Error::UndefinedTpr);
    }
    let score = |threshold: f64| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (scores, truth) in val_scores.iter().zip(val_truth) {
            let est: Vec<f64> = detect_multi(scores, upsample, threshold, window)
                .iter()
                .map(|d| d.position)
                .collect();
            let m = match_detections(&est, truth, tau);
            tp += m.tp;
            fp += m.fp;
            fn_ += m.fn_;
        }
        ThresholdScore::from_counts(threshold, tp, fp, fn_)
    };
    match candidates {
        [] => Err(Error::InvalidArgument("empty threshold candidate grid".into())),
        [only] => Ok(score(*only)),
        _ => {
            let mut best: Option<ThresholdScore> = None;
            for &c in candidates {
                let s = score(c);
                if best.is_none_or(|b| s.g_mean > b.g_mean) {
                    best = Some(s);
                }
            }
            Ok(best.expect("non-empty grid"))
        }
    }
}

/// Something that turns a frame into arrival estimates.
pub trait Detector: Sync {
    fn name(&self) -> &str;
    /// Number of learned parameters, `None` for classical methods.
    fn weights(&self) -> Option<usize>;
    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InferenceMode {
    /// One detection per frame at the score maximum.
    Single,
    Multi { threshold: f64, window: usize },
}

/// The network with its post-processing.
#[derive(Debug, Clone)]
pub struct NetworkDetector {
    name: String,
    net: Network<f32>,
    mode: InferenceMode,
}

impl NetworkDetector {
    pub fn new(name: impl Into<String>, net: Network<f32>, mode: InferenceMode) -> Self {
        Self {
            name: name.into(),
            net,
            mode,
        }
    }

    pub fn network(&self) -> &Network<f32> {
        &self.net
    }

    /// Scores of the amplitude-normalized frame.
    pub fn scores(&self, frame: &Frame) -> Result<Vec<f64>> {
        network_scores(&self.net, frame)
    }
}

/// Normalizes the frame and runs the network.
pub fn network_scores(net: &Network<f32>, frame: &Frame) -> Result<Vec<f64>> {
    let norm = normalize_amplitude(frame)?;
    Ok(net.forward(&norm.frame)?.into_iter().map(f64::from).collect())
}

impl Detector for NetworkDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn weights(&self) -> Option<usize> {
        Some(self.net.count_parameters())
    }

    fn detect(&self, frame: &Frame) -> Result<Vec<Detection>> {
        let scores = self.scores(frame)?;
        let r = self.net.config().upsample;
        Ok(match self.mode {
            InferenceMode::Single => vec![detect_single(&scores, r)?.detection],
            InferenceMode::Multi { threshold, window } => detect_multi(&scores, r, threshold, window),
        })
    }
}

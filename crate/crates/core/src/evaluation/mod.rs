//! Metrics and the benchmark runner.

mod bench;
mod matching;

pub use bench::{benchmark, BenchOutcome, BenchRow, EvalReport, FrameDetection, CSV_HEADER};
pub use matching::{match_detections, MatchResult};

/// `100 * tp / (tp + fp + fn)`; `None` when all counts are zero.
pub fn jaccard(m: &MatchResult) -> Option<f64> {
    let total = m.tp + m.fp + m.fn_;
    (total > 0).then(|| 100.0 * m.tp as f64 / total as f64)
}

/// Root mean square of one frame's matched errors; `None` without TPs.
pub fn frame_rmse(m: &MatchResult) -> Option<f64> {
    if m.matched_errors.is_empty() {
        return None;
    }
    let ms = m.matched_errors.iter().map(|e| e * e).sum::<f64>() / m.matched_errors.len() as f64;
    Some(ms.sqrt())
}

/// Mean and population standard deviation of the per-frame RMSE over
/// frames with at least one TP; `None` when no frame has one.
pub fn rmse_aggregate(per_frame: &[MatchResult]) -> Option<(f64, f64)> {
    let values: Vec<f64> = per_frame.iter().filter_map(frame_rmse).collect();
    if values.is_empty() {
        log::warn!("no true positives: RMSE is undefined");
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// `"0.145 ± 0.212"`.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.3} ± {std:.3}")
}

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{jaccard, match_detections, rmse_aggregate, MatchResult};
use crate::dataset::LabeledFrame;
use crate::detection::{Detection, Detector};

pub const CSV_HEADER: &str = "model,rmse_mean,rmse_std,jaccard_percent,weights,time_ms";

/// One report row. Missing values are `None` (empty in CSV, `null` in JSON).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub rmse_mean: Option<f64>,
    pub rmse_std: Option<f64>,
    pub jaccard_percent: Option<f64>,
    pub weights: Option<usize>,
    /// Mean wall-clock inference time per frame.
    pub time_ms: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Set when the model could not be evaluated.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub tau: f64,
    pub n_frames: usize,
    pub rows: Vec<BenchRow>,
}

impl EvalReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.6}"));
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.model,
                opt(r.rmse_mean),
                opt(r.rmse_std),
                opt(r.jaccard_percent),
                r.weights.map_or(String::new(), |w| w.to_string()),
                opt(r.time_ms),
            ));
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}

/// One detection of one model on one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameDetection {
    pub frame_index: usize,
    pub position: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub report: EvalReport,
    /// Detections per model, in the order of the report rows.
    pub detections: Vec<(String, Vec<FrameDetection>)>,
    /// Per-model, per-frame matches.
    pub matches: Vec<Vec<MatchResult>>,
}

/// Runs every detector over the frames, sequentially so that the timing is
/// meaningful. A detector failing on some frame yields an error row.
pub fn benchmark(models: &[&dyn Detector], frames: &[LabeledFrame], tau: f64) -> BenchOutcome {
    let mut rows = Vec::new();
    let mut detections = Vec::new();
    let mut all_matches = Vec::new();
    for model in models {
        let mut dets: Vec<FrameDetection> = Vec::new();
        let mut matches = Vec::with_capacity(frames.len());
        let mut elapsed = 0.0;
        let mut failure = None;
        for (i, lf) in frames.iter().enumerate() {
            let start = Instant::now();
            let result = model.detect(lf.frame());
            elapsed += start.elapsed().as_secs_f64();
            match result {
                Ok(found) => {
                    let est: Vec<f64> = found.iter().map(|d: &Detection| d.position).collect();
                    matches.push(match_detections(&est, lf.truth(), tau));
                    dets.extend(found.into_iter().map(|d| FrameDetection {
                        frame_index: i,
                        position: d.position,
                        confidence: d.confidence,
                    }));
                }
                Err(e) => {
                    failure = Some(format!("frame {i}: {e}"));
                    break;
                }
            }
        }
        let row = match failure {
            Some(error) => {
                log::error!("{}: {error}", model.name());
                BenchRow {
                    model: model.name().to_string(),
                    rmse_mean: None,
                    rmse_std: None,
                    jaccard_percent: None,
                    weights: model.weights(),
                    time_ms: None,
                    tp: 0,
                    fp: 0,
                    fn_: 0,
                    error: Some(error),
                }
            }
            None => {
                let mut total = MatchResult::default();
                matches.iter().for_each(|m| total.merge(m));
                let rmse = rmse_aggregate(&matches);
                BenchRow {
                    model: model.name().to_string(),
                    rmse_mean: rmse.map(|r| r.0),
                    rmse_std: rmse.map(|r| r.1),
                    jaccard_percent: jaccard(&total),
                    weights: model.weights(),
                    time_ms: (!frames.is_empty()).then(|| 1e3 * elapsed / frames.len() as f64),
                    tp: total.tp,
                    fp: total.fp,
                    fn_: total.fn_,
                    error: None,
                }
            }
        };
        rows.push(row);
        detections.push((model.name().to_string(), dets));
        all_matches.push(matches);
    }
    BenchOutcome {
        report: EvalReport {
            tau,
            n_frames: frames.len(),
            rows,
        },
        detections,
        matches: all_matches,
    }
}

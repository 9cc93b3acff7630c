use crate::dataset::TargetMask;
use crate::error::{Error, Result};

/// The two summands of the training objective and their total.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub l2_term: f64,
    pub l1_term: f64,
}

impl LossBreakdown {
    fn new(l2_term: f64, l1_term: f64) -> Self {
        Self {
            total: l2_term + l1_term,
            l2_term,
            l1_term,
        }
    }

    /// Mean of per-frame losses.
    pub fn mean(items: &[LossBreakdown]) -> Option<LossBreakdown> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let l2 = items.iter().map(|l| l.l2_term).sum::<f64>() / n;
        let l1 = items.iter().map(|l| l.l1_term).sum::<f64>() / n;
        Some(Self::new(l2, l1))
    }
}

/// `sum((p - target)^2) + lambda1 * sum(|p|)` for one frame.
pub fn loss(prediction: &[f64], target: &TargetMask, lambda1: f64) -> Result<LossBreakdown> {
    check_len(prediction.len(), target.len())?;
    let l2 = prediction
        .iter()
        .zip(&target.values)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    let l1 = lambda1 * prediction.iter().map(|p| p.abs()).sum::<f64>();
    Ok(LossBreakdown::new(l2, l1))
}

/// Loss of one frame together with its gradient with respect to the
/// prediction, scaled by `scale` (`1 / B` for a batch mean).
pub(crate) fn loss_and_grad(
    prediction: &[f32],
    target: &TargetMask,
    lambda1: f64,
    scale: f64,
) -> Result<(LossBreakdown, Vec<f32>)> {
    check_len(prediction.len(), target.len())?;
    let (mut l2, mut l1) = (0.0, 0.0);
    let grad = prediction
        .iter()
        .zip(&target.values)
        .map(|(&p, &t)| {
            let p = p as f64;
            let d = p - t;
            l2 += d * d;
            l1 += p.abs();
            let sign = if p > 0.0 {
                1.0
            } else if p < 0.0 {
                -1.0
            } else {
                0.0
            };
            ((2.0 * d + lambda1 * sign) * scale) as f32
        })
        .collect();
    Ok((LossBreakdown::new(l2, lambda1 * l1), grad))
}

fn check_len(pred: usize, target: usize) -> Result<()> {
    if pred != target {
        return Err(Error::Shape(format!(
            "prediction has {pred} samples, target has {target}"
        )));
    }
    Ok(())
}

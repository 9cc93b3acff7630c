use std::f64::consts::PI;

/// Cosine annealing from `lr_start` at step 0 to 0 at `total_steps`; steps
/// past the horizon stay at 0.
pub fn cosine_lr(step: usize, total_steps: usize, lr_start: f64) -> f64 {
    if total_steps == 0 || step >= total_steps {
        return if step == 0 && total_steps == 0 { lr_start } else { 0.0 };
    }
    let lr = 0.5 * lr_start * (1.0 + (PI * step as f64 / total_steps as f64).cos());
    lr.max(0.0)
}

/// True when the best validation loss has gone `patience` consecutive epochs
/// without improving by more than `delta`.
pub fn early_stop(history: &[f64], delta: f64, patience: usize) -> bool {
    let Some((&first, rest)) = history.split_first() else {
        return false;
    };
    let mut best = first;
    let mut stale = 0;
    for &v in rest {
        if best - v > delta {
            best = v;
            stale = 0;
        } else {
            stale += 1;
        }
    }
    stale >= patience
}

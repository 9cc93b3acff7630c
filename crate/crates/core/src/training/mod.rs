//! Loss, optimizer and the training loop.

mod loss;
mod optim;
mod schedule;

pub use loss::{loss, LossBreakdown};
pub use optim::{AdamW, AdamWConfig};
pub use schedule::{cosine_lr, early_stop};

use std::path::Path;

use ndarray::{Array2, Array3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{make_target_mask, random_crop_pad, LabeledFrame, TargetMask};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::seed;
use crate::signal::{add_noise_snr, normalize_amplitude, Frame};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub weight_decay: f64,
    pub lr_start: f64,
    pub max_epochs: usize,
    pub early_stop_delta: f64,
    pub early_stop_patience: usize,
    pub lambda1: f64,
    /// Width of the Gaussian that smooths the label spikes.
    pub sigma: f64,
    pub noise_snr_db: f64,
    /// Random crop-and-pad augmentation of training frames.
    pub crop: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 4,
            weight_decay: 1e-8,
            lr_start: 5e-4,
            max_epochs: 80,
            early_stop_delta: 1e-6,
            early_stop_patience: 5,
            lambda1: 1e-2,
            sigma: 1.0,
            noise_snr_db: 30.0,
            crop: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr_start > 0.0) {
            return bad("lr_start must be positive");
        }
        if !(self.weight_decay >= 0.0) || !(self.lambda1 >= 0.0) || !(self.early_stop_delta >= 0.0) {
            return bad("weight_decay, lambda1 and early_stop_delta must be non-negative");
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if self.early_stop_patience == 0 {
            return bad("early_stop_patience must be >= 1");
        }
        if self.noise_snr_db.is_nan() {
            return bad("noise_snr_db is NaN");
        }
        Ok(())
    }
}

/// One line of `history.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    /// `None` when there is no validation split.
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the epoch with the lowest monitored loss.
    pub network: Network<f32>,
    pub history: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub stopped_early: bool,
}

pub fn save_history(path: &Path, history: &[EpochRecord]) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(history)?)?;
    Ok(())
}

/// Trains `net` and returns the best checkpoint.
///
/// Validation loss is monitored for checkpointing and early stopping; with
/// an empty validation set the training loss is monitored instead.
pub fn train(
    net: Network<f32>,
    train_set: &[LabeledFrame],
    val_set: &[LabeledFrame],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    train_with_progress(net, train_set, val_set, config, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with_progress(
    mut net: Network<f32>,
    train_set: &[LabeledFrame],
    val_set: &[LabeledFrame],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::InvalidInput("training set is empty".into()));
    }
    if val_set.is_empty() {
        log::warn!("no validation frames: monitoring the training loss");
    }
    let mut outcome = TrainOutcome {
        network: net.clone(),
        history: Vec::new(),
        best_epoch: None,
        stopped_early: false,
    };
    let upsample = net.config().upsample;
    let mut optimizer = AdamW::new(AdamWConfig {
        weight_decay: config.weight_decay,
        ..Default::default()
    });
    let val_examples = val_set
        .iter()
        .map(|lf| prepare(lf, upsample, config, None))
        .collect::<Result<Vec<_>>>()?;
    let mut monitored = Vec::new();
    let mut best = f64::INFINITY;

    for epoch in 0..config.max_epochs {
        let lr = cosine_lr(epoch, config.max_epochs, config.lr_start);
        let epoch_seed = seed::derive(config.seed, epoch as u64);
        let mut order: Vec<usize> = (0..train_set.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed::derive(epoch_seed, u64::MAX)));

        let mut losses = Vec::with_capacity(train_set.len());
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let examples = chunk
                .par_iter()
                .map(|&i| prepare(&train_set[i], upsample, config, Some(seed::derive(epoch_seed, i as u64))))
                .collect::<Result<Vec<_>>>()?;
            let x = stack(&examples)?;
            let (out, cache) = net.forward_train(x.view())?;
            let scale = 1.0 / examples.len() as f64;
            let mut upstream = Array2::<f32>::zeros(out.raw_dim());
            for (b, (_, target)) in examples.iter().enumerate() {
                let row = out.row(b);
                let pred = row.as_slice().expect("contiguous output");
                let (l, g) = loss::loss_and_grad(pred, target, config.lambda1, scale)?;
                if !l.total.is_finite() {
                    return Err(Error::Diverged {
                        epoch: epoch + 1,
                        step,
                        loss: l.total,
                    });
                }
                upstream.row_mut(b).assign(&ndarray::ArrayView1::from(&g));
                losses.push(l);
            }
            let grads = net.backward(cache, upstream.view())?;
            optimizer.step(&mut net, &grads, lr);
        }

        let train_loss = LossBreakdown::mean(&losses).map_or(0.0, |l| l.total);
        let val_loss = if val_examples.is_empty() {
            None
        } else {
            Some(evaluate_loss(&net, &val_examples, config)?)
        };
        let record = EpochRecord {
            epoch: epoch + 1,
            lr,
            train_loss,
            val_loss,
        };
        log::info!(
            "epoch {} lr {:.3e} train {:.4} val {}",
            record.epoch,
            lr,
            train_loss,
            val_loss.map_or("-".to_string(), |v| format!("{v:.4}"))
        );
        on_epoch(&record);
        outcome.history.push(record);

        let current = val_loss.unwrap_or(train_loss);
        if !current.is_finite() {
            return Err(Error::Diverged {
                epoch: epoch + 1,
                step: 0,
                loss: current,
            });
        }
        if current < best {
            best = current;
            outcome.best_epoch = Some(epoch + 1);
            outcome.network = net.clone();
        }
        monitored.push(current);
        if early_stop(&monitored, config.early_stop_delta, config.early_stop_patience) {
            outcome.stopped_early = true;
            break;
        }
    }
    Ok(outcome)
}

/// Normalized frame and target; `augment` carries the seed of the noise and
/// crop draws for a training frame.
fn prepare(
    lf: &LabeledFrame,
    upsample: usize,
    config: &TrainConfig,
    augment: Option<u64>,
) -> Result<(Frame, TargetMask)> {
    let norm = normalize_amplitude(lf.frame())?;
    let (frame, truth) = match augment {
        Some(s) => {
            let noisy = if norm.zero_frame {
                norm.frame
            } else {
                add_noise_snr(&norm.frame, config.noise_snr_db, seed::derive(s, 0))?
            };
            let lf = LabeledFrame::new(noisy, lf.truth().to_vec())?;
            let lf = if config.crop {
                random_crop_pad(&lf, seed::derive(s, 1))
            } else {
                lf
            };
            lf.into_parts()
        }
        None => (norm.frame, lf.truth().to_vec()),
    };
    let target = make_target_mask(&truth, frame.len(), upsample, config.sigma)?;
    Ok((frame, target))
}

fn stack(examples: &[(Frame, TargetMask)]) -> Result<Array3<f32>> {
    let (c, n) = examples[0].0.samples().dim();
    let mut x = Array3::zeros((c, examples.len(), n));
    for (b, (frame, _)) in examples.iter().enumerate() {
        if frame.samples().dim() != (c, n) {
            return Err(Error::Shape(format!(
                "frame shape {:?} differs from {:?} within a batch",
                frame.samples().dim(),
                (c, n)
            )));
        }
        x.slice_mut(ndarray::s![.., b, ..]).assign(frame.samples());
    }
    Ok(x)
}

/// Mean per-frame loss without augmentation.
fn evaluate_loss(net: &Network<f32>, examples: &[(Frame, TargetMask)], config: &TrainConfig) -> Result<f64> {
    let mut losses = Vec::with_capacity(examples.len());
    for chunk in examples.chunks(config.batch_size.max(16)) {
        let out = net.forward_batch(stack(chunk)?.view())?;
        for (row, (_, target)) in out.rows().into_iter().zip(chunk) {
            let pred: Vec<f64> = row.iter().map(|&v| v as f64).collect();
            losses.push(loss(&pred, target, config.lambda1)?);
        }
    }
    Ok(LossBreakdown::mean(&losses).map_or(0.0, |l| l.total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{generate_synthetic, SyntheticConfig};
    use crate::model::ModelConfig;

    fn frames(n: usize, seed: u64) -> Vec<LabeledFrame> {
        generate_synthetic(&SyntheticConfig {
            n_frames: n,
            frame_length: 128,
            echoes_max: 2,
            seed,
            ..Default::default()
        })
        .unwrap()
    }

    fn small_net(seed: u64) -> Network<f32> {
        Network::new(
            ModelConfig {
                features: 8,
                ..Default::default()
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn zero_epochs_returns_initial_network() {
        let net = small_net(1);
        let cfg = TrainConfig {
            max_epochs: 0,
            ..Default::default()
        };
        let out = train(net.clone(), &frames(4, 1), &[], &cfg).unwrap();
        assert_eq!(out.network, net);
        assert!(out.history.is_empty());
        assert_eq!(out.best_epoch, None);
    }

    #[test]
    fn overfits_a_fixed_mini_set() {
        // 50 steps on 4 frames, no augmentation
        let set = frames(4, 2);
        let cfg = TrainConfig {
            batch_size: 4,
            lr_start: 5e-3,
            max_epochs: 50,
            early_stop_patience: 50,
            noise_snr_db: f64::INFINITY,
            crop: false,
            ..Default::default()
        };
        let out = train(small_net(3), &set, &[], &cfg).unwrap();
        let first = out.history[0].train_loss;
        let last = out.history.last().unwrap().train_loss;
        assert!(last < 0.5 * first, "{first} -> {last}");
    }

    #[test]
    fn same_seed_same_parameters() {
        let set = frames(6, 4);
        let cfg = TrainConfig {
            max_epochs: 2,
            seed: 9,
            ..Default::default()
        };
        let a = train(small_net(5), &set[..5], &set[5..], &cfg).unwrap();
        let b = train(small_net(5), &set[..5], &set[5..], &cfg).unwrap();
        assert_eq!(a.network, b.network);
        assert_eq!(a.history, b.history);
    }

    #[test]
    fn history_and_checkpoint_are_consistent() {
        let set = frames(8, 6);
        let cfg = TrainConfig {
            max_epochs: 3,
            ..Default::default()
        };
        let out = train(small_net(7), &set[..7], &set[7..], &cfg).unwrap();
        assert_eq!(out.history.len(), 3);
        let best = out
            .history
            .iter()
            .min_by(|a, b| a.val_loss.unwrap().total_cmp(&b.val_loss.unwrap()))
            .unwrap();
        assert_eq!(out.best_epoch, Some(best.epoch));
        assert!(out.history.iter().all(|r| r.train_loss >= 0.0));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = TrainConfig {
            early_stop_patience: 0,
            ..Default::default()
        };
        assert!(matches!(
            train(small_net(1), &frames(2, 1), &[], &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn divergence_is_reported() {
        let mut net = small_net(1);
        net.layers_mut()[15].conv_mut().bias_mut().fill(f32::INFINITY);
        let cfg = TrainConfig {
            max_epochs: 1,
            ..Default::default()
        };
        assert!(matches!(
            train(net, &frames(2, 1), &[], &cfg),
            Err(Error::Diverged { .. })
        ));
    }
}

use crate::model::{Gradients, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-8,
        }
    }
}

/// First and second moment estimates for one flat parameter vector.
#[derive(Debug, Clone, Default)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Moments {
    fn update(&mut self, params: &mut [f32], grads: &[f32], lr: f64, t: u64, cfg: &AdamWConfig) {
        if self.m.len() != params.len() {
            self.m = vec![0.0; params.len()];
            self.v = vec![0.0; params.len()];
        }
        let bc1 = 1.0 - cfg.beta1.powi(t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(t as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            let g = g as f64;
            let mut x = *p as f64 * (1.0 - lr * cfg.weight_decay);
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            x -= lr * (*m / bc1) / ((*v / bc2).sqrt() + cfg.eps);
            *p = x as f32;
        }
    }
}

/// AdamW with decoupled weight decay.
#[derive(Debug, Clone)]
pub struct AdamW {
    config: AdamWConfig,
    step: u64,
    weights: Vec<Moments>,
    biases: Vec<Moments>,
}

impl AdamW {
    pub fn new(config: AdamWConfig) -> Self {
        Self {
            config,
            step: 0,
            weights: Vec::new(),
            biases: Vec::new(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// One update of every trainable layer.
    pub fn step(&mut self, net: &mut Network<f32>, grads: &Gradients<f32>, lr: f64) {
        self.step += 1;
        let n = net.layers().len();
        self.weights.resize_with(n, Moments::default);
        self.biases.resize_with(n, Moments::default);
        for (i, layer) in net.layers_mut().iter_mut().enumerate() {
            if !layer.trainable() {
                continue;
            }
            let conv = layer.conv_mut();
            let w = conv.weight_mut().as_slice_mut().expect("contiguous weights");
            let gw = grads.weights[i].as_slice().expect("contiguous gradient");
            self.weights[i].update(w, gw, lr, self.step, &self.config);
            let b = conv.bias_mut().as_slice_mut().expect("contiguous bias");
            let gb = grads.biases[i].as_slice().expect("contiguous gradient");
            self.biases[i].update(b, gb, lr, self.step, &self.config);
        }
    }

    /// Update of a bare parameter vector, sharing the moment state slot 0.
    pub fn step_slice(&mut self, params: &mut [f32], grads: &[f32], lr: f64) {
        self.step += 1;
        self.weights.resize_with(1, Moments::default);
        self.weights[0].update(params, grads, lr, self.step, &self.config);
    }
}

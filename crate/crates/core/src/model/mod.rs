//! The super-resolution localization network.
//!
//! Layer sequence (all convolutions zero-padded, `F` features):
//!
//! | layer | convolution               | followed by                                  |
//! |-------|---------------------------|----------------------------------------------|
//! | l1    | C -> F, k=9               | ReLU                                         |
//! | l2    | F -> F*S, k=7, stride S   | ReLU                                         |
//! | l3    | F*S -> F*S, k=3           | ReLU, shuffle by S, + l1 output              |
//! | l4-l13| five pairs F -> F, k=7    | first: ReLU; second: + pair input            |
//! | l14   | F -> F, k=7               | + output of the l3 add (long skip)           |
//! | l15   | F -> F, k=3               |                                              |
//! | head  | F -> R, k=3               | shuffle by R                                 |
//!
//! An `N`-sample input yields `N * R` scores.

mod conv;
mod io;
mod shuffle;

pub use conv::Conv1d;
pub use io::{load_model, save_model, ModelFile, MODEL_FORMAT_VERSION};
pub use shuffle::{sample_shuffle, sample_unshuffle, shuffle_channels, unshuffle_channels};

use ndarray::{Array2, Array3, ArrayView2, ArrayView3, Axis, NdFloat, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Frame;

/// Residual pairs in the trunk.
pub const RESIDUAL_BLOCKS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Feature channels `F`.
    pub features: usize,
    /// Upsampling factor `R`.
    pub upsample: usize,
    /// Temporal contraction factor `S` of the context block.
    pub contraction: usize,
    /// Input channels `C`.
    pub in_channels: usize,
    pub kernel_first: usize,
    pub kernel_mid: usize,
    pub kernel_tail: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            features: 64,
            upsample: 4,
            contraction: 4,
            in_channels: 1,
            kernel_first: 9,
            kernel_mid: 7,
            kernel_tail: 3,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("features", self.features),
            ("upsample", self.upsample),
            ("contraction", self.contraction),
            ("in_channels", self.in_channels),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be >= 1")));
        }
        for (name, k) in [
            ("kernel_first", self.kernel_first),
            ("kernel_mid", self.kernel_mid),
            ("kernel_tail", self.kernel_tail),
        ] {
            if k % 2 == 0 {
                return Err(Error::Config(format!("{name} must be odd, got {k}")));
            }
        }
        Ok(())
    }

    /// `(name, in, out, kernel, stride, relu, residual)` for every
    /// convolution, in parameter order.
    fn layout(&self) -> Vec<LayerInfo> {
        let (c, f, s, r) = (self.in_channels, self.features, self.contraction, self.upsample);
        let mut v = vec![
            LayerInfo::new("l1", c, f, self.kernel_first, 1, true, Residual::None),
            LayerInfo::new("l2", f, f * s, self.kernel_mid, s, true, Residual::None),
            LayerInfo::new("l3", f * s, f * s, self.kernel_tail, 1, true, Residual::ContextSkip),
        ];
        for b in 0..RESIDUAL_BLOCKS {
            let first = 4 + 2 * b;
            v.push(LayerInfo::new(
                LAYER_NAMES[first - 1],
                f,
                f,
                self.kernel_mid,
                1,
                true,
                Residual::None,
            ));
            v.push(LayerInfo::new(
                LAYER_NAMES[first],
                f,
                f,
                self.kernel_mid,
                1,
                false,
                Residual::BlockSkip,
            ));
        }
        v.push(LayerInfo::new("l14", f, f, self.kernel_mid, 1, false, Residual::LongSkip));
        v.push(LayerInfo::new("l15", f, f, self.kernel_tail, 1, false, Residual::None));
        v.push(LayerInfo::new("head", f, r, self.kernel_tail, 1, false, Residual::None));
        v
    }
}

const LAYER_NAMES: [&str; 16] = [
    "l1", "l2", "l3", "l4", "l5", "l6", "l7", "l8", "l9", "l10", "l11", "l12", "l13", "l14",
    "l15", "head",
];

/// What gets added to a layer's result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Residual {
    None,
    /// After ReLU and shuffle-by-S, the l1 activation is added.
    ContextSkip,
    /// The input of the residual pair is added to the conv output.
    BlockSkip,
    /// The context block output is added to the conv output.
    LongSkip,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerInfo {
    pub name: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub relu: bool,
    pub residual: Residual,
}

impl LayerInfo {
    fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        relu: bool,
        residual: Residual,
    ) -> Self {
        Self {
            name: name.to_string(),
            in_channels,
            out_channels,
            kernel,
            stride,
            relu,
            residual,
        }
    }

    fn n_params(&self) -> usize {
        self.in_channels * self.out_channels * self.kernel + self.out_channels
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    info: LayerInfo,
    conv: Conv1d<T>,
    trainable: bool,
}

impl<T: NdFloat> Layer<T> {
    pub fn info(&self) -> &LayerInfo {
        &self.info
    }

    pub fn conv(&self) -> &Conv1d<T> {
        &self.conv
    }

    pub fn conv_mut(&mut self) -> &mut Conv1d<T> {
        &mut self.conv
    }

    pub fn trainable(&self) -> bool {
        self.trainable
    }
}

/// Per-layer parameter gradients, aligned with [`Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T> {
    pub weights: Vec<Array3<T>>,
    pub biases: Vec<ndarray::Array1<T>>,
}

impl<T: NdFloat> Gradients<T> {
    pub fn zeros_like(net: &Network<T>) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array3::zeros(l.conv.weight.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| ndarray::Array1::zeros(l.conv.bias.len())).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| *v == T::zero()))
            && self.biases.iter().all(|b| b.iter().all(|v| *v == T::zero()))
    }
}

/// Intermediate activations kept by a training forward pass.
pub struct ForwardCache<T> {
    batch: usize,
    len: usize,
    cols: Vec<Array2<T>>,
    a1: Array3<T>,
    a2: Array3<T>,
    a3: Array3<T>,
    trunk: Vec<Array3<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    config: ModelConfig,
    layers: Vec<Layer<T>>,
}

impl<T: NdFloat> Network<T> {
    /// All weights and biases zero.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layers = config
            .layout()
            .into_iter()
            .map(|info| Layer {
                conv: Conv1d::zeros(info.in_channels, info.out_channels, info.kernel, info.stride),
                info,
                trainable: true,
            })
            .collect();
        Ok(Self { config, layers })
    }

    /// Uniform fan-in initialization `U(-1/sqrt(fan_in), 1/sqrt(fan_in))` for
    /// weights, zero biases.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in &mut net.layers {
            let fan_in = (layer.info.in_channels * layer.info.kernel) as f64;
            let bound = 1.0 / fan_in.sqrt();
            layer.conv.weight.mapv_inplace(|_| {
                T::from(rng.random_range(-bound..bound)).expect("float conversion")
            });
        }
        Ok(net)
    }

    pub(crate) fn from_layers(config: ModelConfig, convs: Vec<Conv1d<T>>) -> Result<Self> {
        let mut net = Self::zeros(config)?;
        if convs.len() != net.layers.len() {
            return Err(Error::Shape(format!(
                "expected {} layers, got {}",
                net.layers.len(),
                convs.len()
            )));
        }
        for (layer, conv) in net.layers.iter_mut().zip(convs) {
            if conv.weight.dim() != layer.conv.weight.dim() || conv.stride() != layer.info.stride {
                return Err(Error::Shape(format!(
                    "layer {} expects weights {:?}, got {:?}",
                    layer.info.name,
                    layer.conv.weight.dim(),
                    conv.weight.dim()
                )));
            }
            layer.conv = conv;
        }
        Ok(net)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn layer_table(&self) -> Vec<LayerInfo> {
        self.layers.iter().map(|l| l.info.clone()).collect()
    }

    /// Exact number of weight and bias scalars.
    pub fn count_parameters(&self) -> usize {
        self.layers.iter().map(|l| l.conv.n_params()).sum()
    }

    /// Marks a layer as frozen (`false`) or trainable; frozen layers receive
    /// zero gradients.
    pub fn set_trainable(&mut self, name: &str, trainable: bool) -> Result<()> {
        let layer = self
            .layers
            .iter_mut()
            .find(|l| l.info.name == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no layer named {name}")))?;
        layer.trainable = trainable;
        Ok(())
    }

    /// Same architecture and parameters in another float type.
    pub fn cast<U: NdFloat>(&self) -> Network<U> {
        let conv = |c: &Conv1d<T>| Conv1d {
            weight: c.weight.mapv(|v| U::from(v).expect("float conversion")),
            bias: c.bias.mapv(|v| U::from(v).expect("float conversion")),
            stride: c.stride(),
        };
        Network {
            config: self.config.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    info: l.info.clone(),
                    conv: conv(&l.conv),
                    trainable: l.trainable,
                })
                .collect(),
        }
    }

    fn check_input(&self, channels: usize, len: usize) -> Result<()> {
        if channels != self.config.in_channels {
            return Err(Error::Shape(format!(
                "input has {channels} channels, model expects {}",
                self.config.in_channels
            )));
        }
        if len == 0 || len % self.config.contraction != 0 {
            return Err(Error::Shape(format!(
                "input length {len} is not a positive multiple of S = {}",
                self.config.contraction
            )));
        }
        Ok(())
    }

    /// Scores for one frame, length `N * R`.
    pub fn forward(&self, frame: &Frame) -> Result<Vec<T>> {
        let x = frame_input::<T>(frame);
        let out = self.forward_batch(x.view())?;
        Ok(out.into_iter().collect())
    }

    /// Scores for a batch `(C, B, N)`, returned as `(B, N * R)`.
    pub fn forward_batch(&self, x: ArrayView3<'_, T>) -> Result<Array2<T>> {
        Ok(self.run(x, false)?.0)
    }

    /// Forward pass that keeps what [`Self::backward`] needs.
    pub fn forward_train(&self, x: ArrayView3<'_, T>) -> Result<(Array2<T>, ForwardCache<T>)> {
        let (out, cache) = self.run(x, true)?;
        Ok((out, cache.expect("cache requested")))
    }

    fn run(&self, x: ArrayView3<'_, T>, keep: bool) -> Result<(Array2<T>, Option<ForwardCache<T>>)> {
        let (channels, batch, len) = x.dim();
        self.check_input(channels, len)?;
        let (s, r) = (self.config.contraction, self.config.upsample);
        let mut cols = Vec::with_capacity(if keep { self.layers.len() } else { 0 });
        let mut conv = |i: usize, input: ArrayView3<'_, T>| {
            let (y, c) = self.layers[i].conv.forward(input);
            if keep {
                cols.push(c);
            }
            y
        };

        let a1 = relu(conv(0, x));
        let a2 = relu(conv(1, a1.view()));
        let a3 = relu(conv(2, a2.view()));
        let mut h = shuffle_channels(a3.view(), s);
        h += &a1;
        let context = h.clone();

        let mut trunk = Vec::with_capacity(if keep { RESIDUAL_BLOCKS } else { 0 });
        for b in 0..RESIDUAL_BLOCKS {
            let v = relu(conv(3 + 2 * b, h.view()));
            let w = conv(4 + 2 * b, v.view());
            h += &w;
            if keep {
                trunk.push(v);
            }
        }
        let mut h14 = conv(13, h.view());
        h14 += &context;
        let z15 = conv(14, h14.view());
        let head = conv(15, z15.view());
        let scores = shuffle_channels(head.view(), r);
        let out = scores
            .index_axis_move(Axis(0), 0)
            .as_standard_layout()
            .into_owned();

        let cache = keep.then(|| ForwardCache {
            batch,
            len,
            cols,
            a1,
            a2,
            a3,
            trunk,
        });
        Ok((out, cache))
    }

    /// Parameter gradients of `sum(upstream * scores)`, i.e. the
    /// back-propagation of an upstream gradient `(B, N * R)`.
    pub fn backward(&self, cache: ForwardCache<T>, upstream: ArrayView2<'_, T>) -> Result<Gradients<T>> {
        let (s, r) = (self.config.contraction, self.config.upsample);
        let (batch, len) = (cache.batch, cache.len);
        if upstream.dim() != (batch, len * r) {
            return Err(Error::Shape(format!(
                "upstream gradient is {:?}, expected ({batch}, {})",
                upstream.dim(),
                len * r
            )));
        }
        let ForwardCache {
            cols,
            a1,
            a2,
            a3,
            trunk,
            ..
        } = cache;
        let mut grads = Gradients::zeros_like(self);
        let mut store = |i: usize, dw: Array3<T>, db: ndarray::Array1<T>| {
            if self.layers[i].trainable {
                grads.weights[i] = dw;
                grads.biases[i] = db;
            }
        };
        let back = |i: usize, dy: ArrayView3<'_, T>, in_len: usize, need: bool| {
            self.layers[i].conv.backward(&cols[i], dy, in_len, need)
        };

        let g_scores = upstream.insert_axis(Axis(0));
        let g_head = unshuffle_channels(g_scores, r);
        let (g, dw, db) = back(15, g_head.view(), len, true);
        store(15, dw, db);
        let (g, dw, db) = back(14, g.expect("input grad").view(), len, true);
        store(14, dw, db);
        let g_h14 = g.expect("input grad");
        let (g, dw, db) = back(13, g_h14.view(), len, true);
        store(13, dw, db);
        let mut g_h = g.expect("input grad");

        for b in (0..RESIDUAL_BLOCKS).rev() {
            let (second, first) = (4 + 2 * b, 3 + 2 * b);
            let (g_v, dw, db) = back(second, g_h.view(), len, true);
            store(second, dw, db);
            let mut g_u = g_v.expect("input grad");
            relu_backward(&mut g_u, &trunk[b]);
            let (g_in, dw, db) = back(first, g_u.view(), len, true);
            store(first, dw, db);
            g_h += &g_in.expect("input grad");
        }
        // long skip
        g_h += &g_h14;

        let mut g_a3 = unshuffle_channels(g_h.view(), s);
        relu_backward(&mut g_a3, &a3);
        let (g, dw, db) = back(2, g_a3.view(), len / s, true);
        store(2, dw, db);
        let mut g_a2 = g.expect("input grad");
        relu_backward(&mut g_a2, &a2);
        let (g, dw, db) = back(1, g_a2.view(), len, true);
        store(1, dw, db);
        let mut g_a1 = g.expect("input grad");
        // context-block skip
        g_a1 += &g_h;
        relu_backward(&mut g_a1, &a1);
        let (_, dw, db) = back(0, g_a1.view(), len, false);
        store(0, dw, db);
        Ok(grads)
    }

    /// Forward plus backward for one frame and upstream gradient of length
    /// `N * R`.
    pub fn backward_frame(&self, frame: &Frame, upstream: &[T]) -> Result<Gradients<T>> {
        let x = frame_input::<T>(frame);
        let (_, cache) = self.forward_train(x.view())?;
        let up = ArrayView2::from_shape((1, upstream.len()), upstream)
            .map_err(|e| Error::Shape(e.to_string()))?;
        self.backward(cache, up)
    }
}

/// `(C, 1, N)` network input for one frame.
pub fn frame_input<T: NdFloat>(frame: &Frame) -> Array3<T> {
    let (c, n) = frame.samples().dim();
    frame
        .samples()
        .mapv(|v| T::from(v).expect("float conversion"))
        .into_shape_with_order((c, 1, n))
        .expect("contiguous frame")
}

fn relu<T: NdFloat>(mut x: Array3<T>) -> Array3<T> {
    x.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() });
    x
}

fn relu_backward<T: NdFloat>(grad: &mut Array3<T>, activation: &Array3<T>) {
    Zip::from(grad).and(activation).for_each(|g, &a| {
        if a <= T::zero() {
            *g = T::zero();
        }
    });
}

/// Parameter count of a configuration, from the layer formula
/// `sum(C_in * C_out * k + C_out)`.
pub fn parameter_count(config: &ModelConfig) -> usize {
    config.layout().iter().map(LayerInfo::n_params).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> ModelConfig {
        ModelConfig {
            features: 4,
            ..Default::default()
        }
    }

    #[test]
    fn default_parameter_count() {
        let net = Network::<f32>::zeros(ModelConfig::default()).unwrap();
        // 640 + 114944 + 196864 + 11 * 28736 + 12352 + 772
        assert_eq!(net.count_parameters(), 641_668);
        assert_eq!(parameter_count(net.config()), 641_668);
    }

    #[test]
    fn unit_config_hand_count() {
        let cfg = ModelConfig {
            features: 1,
            upsample: 1,
            contraction: 1,
            in_channels: 1,
            ..Default::default()
        };
        // l1: 9+1, l2: 7+1, l3: 3+1, l4..l14: 11*(7+1), l15: 3+1, head: 3+1
        let hand = 10 + 8 + 4 + 11 * 8 + 4 + 4;
        assert_eq!(Network::<f32>::zeros(cfg).unwrap().count_parameters(), hand);
    }

    #[test]
    fn count_grows_with_features() {
        let small = parameter_count(&toy());
        let big = parameter_count(&ModelConfig {
            features: 8,
            ..Default::default()
        });
        assert!(big > small);
    }

    #[test]
    fn relu_only_where_no_direct_residual_add() {
        let net = Network::<f32>::zeros(ModelConfig::default()).unwrap();
        let table = net.layer_table();
        assert_eq!(table.len(), 16);
        for info in &table {
            match info.residual {
                Residual::BlockSkip | Residual::LongSkip => assert!(!info.relu, "{}", info.name),
                _ => {}
            }
        }
        let adds: Vec<&str> = table
            .iter()
            .filter(|i| i.residual != Residual::None)
            .map(|i| i.name.as_str())
            .collect();
        assert_eq!(adds, ["l3", "l5", "l7", "l9", "l11", "l13", "l14"]);
        let relus: Vec<&str> = table.iter().filter(|i| i.relu).map(|i| i.name.as_str()).collect();
        assert_eq!(relus, ["l1", "l2", "l3", "l4", "l6", "l8", "l10", "l12"]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::<f32>::zeros(ModelConfig::default()).unwrap();
        let frame = Frame::mono((0..256).map(|i| (i as f32 * 0.1).sin()).collect(), 1.0).unwrap();
        let out = net.forward(&frame).unwrap();
        assert_eq!(out.len(), 1024);
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        let net = Network::<f32>::new(toy(), 1).unwrap();
        let frame = Frame::mono(vec![0.5; 30], 1.0).unwrap();
        assert!(matches!(net.forward(&frame), Err(Error::Shape(_))));
        let two = Frame::new(Array2::zeros((2, 32)), 1.0).unwrap();
        assert!(matches!(net.forward(&two), Err(Error::Shape(_))));
        assert!(Network::<f32>::zeros(ModelConfig {
            kernel_mid: 6,
            ..Default::default()
        })
        .is_err());
    }

    #[test]
    fn residual_blocks_with_zero_weights_are_identity() {
        // zero both convs of every pair: the trunk passes its input through,
        // so the output equals that of a net whose trunk is skipped
        let mut net = Network::<f64>::new(toy(), 4).unwrap();
        for i in 3..13 {
            net.layers_mut()[i].conv_mut().weight_mut().fill(0.0);
        }
        let frame = Frame::mono((0..32).map(|i| ((i * i) as f32 * 0.05).cos()).collect(), 1.0).unwrap();
        let x = frame_input::<f64>(&frame);
        let (_, cache) = net.forward_train(x.view()).unwrap();
        // context output h3, recomputed by hand
        let a1 = relu(net.layers[0].conv.forward(x.view()).0);
        let a2 = relu(net.layers[1].conv.forward(a1.view()).0);
        let a3 = relu(net.layers[2].conv.forward(a2.view()).0);
        let mut h3 = shuffle_channels(a3.view(), 4);
        h3 += &a1;
        let mut h14 = net.layers[13].conv.forward(h3.view()).0;
        h14 += &h3;
        let z15 = net.layers[14].conv.forward(h14.view()).0;
        let head = net.layers[15].conv.forward(z15.view()).0;
        let expected: Vec<f64> = shuffle_channels(head.view(), 4).iter().copied().collect();
        assert_eq!(net.forward(&frame).unwrap(), expected);
        drop(cache);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Network::<f32>::new(ModelConfig::default(), 9).unwrap();
        let frame = Frame::mono((0..512).map(|i| ((i % 37) as f32 - 18.0) / 18.0).collect(), 1.0).unwrap();
        assert_eq!(net.forward(&frame).unwrap(), net.forward(&frame).unwrap());
    }

    #[test]
    fn batch_matches_single_frames() {
        let net = Network::<f64>::new(toy(), 2).unwrap();
        let frames: Vec<Frame> = (0..3)
            .map(|k| Frame::mono((0..32).map(|i| ((i + 5 * k) as f32 * 0.4).sin()).collect(), 1.0).unwrap())
            .collect();
        let mut x = Array3::zeros((1, 3, 32));
        for (b, f) in frames.iter().enumerate() {
            x.slice_mut(ndarray::s![.., b, ..]).assign(&f.samples().mapv(|v| v as f64));
        }
        let out = net.forward_batch(x.view()).unwrap();
        for (b, f) in frames.iter().enumerate() {
            let single = net.forward(f).unwrap();
            for (a, s) in out.row(b).iter().zip(single) {
                assert!((a - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Network::<f64>::new(toy(), 3).unwrap();
        let frame = Frame::mono((0..32).map(|i| (i as f32 * 0.3).sin()).collect(), 1.0).unwrap();
        let g = net.backward_frame(&frame, &[0.0; 128]).unwrap();
        assert!(g.is_zero());
    }

    #[test]
    fn frozen_layer_gets_exactly_zero_gradient() {
        let mut net = Network::<f64>::new(toy(), 3).unwrap();
        net.set_trainable("l7", false).unwrap();
        let frame = Frame::mono((0..32).map(|i| (i as f32 * 0.3).sin()).collect(), 1.0).unwrap();
        let up: Vec<f64> = (0..128).map(|i| (i as f64 * 0.11).cos()).collect();
        let g = net.backward_frame(&frame, &up).unwrap();
        assert!(g.weights[6].iter().all(|&v| v == 0.0));
        assert!(g.biases[6].iter().all(|&v| v == 0.0));
        assert!(g.weights[5].iter().any(|&v| v != 0.0));
        assert!(net.set_trainable("nope", false).is_err());
    }

    #[test]
    fn backward_rejects_wrong_upstream_length() {
        let net = Network::<f64>::new(toy(), 3).unwrap();
        let frame = Frame::mono(vec![0.1; 32], 1.0).unwrap();
        assert!(matches!(
            net.backward_frame(&frame, &[0.0; 100]),
            Err(Error::Shape(_))
        ));
    }
}

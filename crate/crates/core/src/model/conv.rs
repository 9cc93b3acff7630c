//! 1-D convolution over `(channels, batch, length)` activations.
//!
//! Forward and backward both go through an im2col matrix of shape
//! `(C_in * k, B * L_out)` so that every pass is a single GEMM.

use ndarray::{Array1, Array2, Array3, ArrayView3, Axis, NdFloat};

/// Zero-padded ("same" for stride 1) convolution with `padding = k / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d<T> {
    pub(crate) weight: Array3<T>,
    pub(crate) bias: Array1<T>,
    pub(crate) stride: usize,
}

impl<T: NdFloat> Conv1d<T> {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel: usize, stride: usize) -> Self {
        Self {
            weight: Array3::zeros((out_channels, in_channels, kernel)),
            bias: Array1::zeros(out_channels),
            stride,
        }
    }

    pub fn in_channels(&self) -> usize {
        self.weight.dim().1
    }

    pub fn out_channels(&self) -> usize {
        self.weight.dim().0
    }

    pub fn kernel(&self) -> usize {
        self.weight.dim().2
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn padding(&self) -> usize {
        self.kernel() / 2
    }

    /// `(weight, bias)` scalar count.
    pub fn n_params(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Weight tensor, shape `(out, in, k)`.
    pub fn weight(&self) -> &Array3<T> {
        &self.weight
    }

    pub fn bias(&self) -> &Array1<T> {
        &self.bias
    }

    pub fn weight_mut(&mut self) -> &mut Array3<T> {
        &mut self.weight
    }

    pub fn bias_mut(&mut self) -> &mut Array1<T> {
        &mut self.bias
    }

    pub fn out_len(&self, len: usize) -> usize {
        (len + 2 * self.padding() - self.kernel()) / self.stride + 1
    }

    /// `cols[c*k + j, b*L_out + i] = x[c, b, i*stride + j - pad]`, zero where
    /// the source index falls outside the signal.
    pub(crate) fn im2col(&self, x: ArrayView3<'_, T>) -> Array2<T> {
        let (c_in, batch, len) = x.dim();
        let k = self.kernel();
        let pad = self.padding() as isize;
        let l_out = self.out_len(len);
        let x = x.as_standard_layout();
        let src = x.as_slice().expect("standard layout");
        let mut cols = Array2::<T>::zeros((c_in * k, batch * l_out));
        let dst = cols.as_slice_mut().expect("fresh array");
        let row_len = batch * l_out;
        for c in 0..c_in {
            for j in 0..k {
                let row = &mut dst[(c * k + j) * row_len..(c * k + j + 1) * row_len];
                let offset = j as isize - pad;
                for b in 0..batch {
                    let xs = &src[(c * batch + b) * len..(c * batch + b + 1) * len];
                    let out = &mut row[b * l_out..(b + 1) * l_out];
                    let (lo, hi) = valid_range(offset, self.stride, len, l_out);
                    if self.stride == 1 {
                        let s0 = (lo as isize + offset) as usize;
                        out[lo..hi].copy_from_slice(&xs[s0..s0 + (hi - lo)]);
                    } else {
                        for i in lo..hi {
                            out[i] = xs[(i as isize * self.stride as isize + offset) as usize];
                        }
                    }
                }
            }
        }
        cols
    }

    /// Adjoint of [`Self::im2col`].
    fn col2im(&self, dcols: &Array2<T>, batch: usize, len: usize) -> Array3<T> {
        let c_in = self.in_channels();
        let k = self.kernel();
        let pad = self.padding() as isize;
        let l_out = self.out_len(len);
        let mut dx = Array3::<T>::zeros((c_in, batch, len));
        let dst = dx.as_slice_mut().expect("fresh array");
        let dcols = dcols.as_standard_layout();
        let src = dcols.as_slice().expect("standard layout");
        let row_len = batch * l_out;
        for c in 0..c_in {
            for j in 0..k {
                let row = &src[(c * k + j) * row_len..(c * k + j + 1) * row_len];
                let offset = j as isize - pad;
                for b in 0..batch {
                    let xs = &mut dst[(c * batch + b) * len..(c * batch + b + 1) * len];
                    let g = &row[b * l_out..(b + 1) * l_out];
                    let (lo, hi) = valid_range(offset, self.stride, len, l_out);
                    for i in lo..hi {
                        let s = (i as isize * self.stride as isize + offset) as usize;
                        xs[s] += g[i];
                    }
                }
            }
        }
        dx
    }

    fn weight_matrix(&self) -> ndarray::ArrayView2<'_, T> {
        let (o, i, k) = self.weight.dim();
        self.weight
            .view()
            .into_shape_with_order((o, i * k))
            .expect("weights are contiguous")
    }

    /// Returns the output `(C_out, B, L_out)` and the im2col matrix needed by
    /// [`Self::backward`].
    pub fn forward(&self, x: ArrayView3<'_, T>) -> (Array3<T>, Array2<T>) {
        let (_, batch, len) = x.dim();
        let l_out = self.out_len(len);
        let cols = self.im2col(x);
        let mut y = self.weight_matrix().dot(&cols);
        for (mut row, &b) in y.axis_iter_mut(Axis(0)).zip(self.bias.iter()) {
            row.mapv_inplace(|v| v + b);
        }
        let y = y
            .into_shape_with_order((self.out_channels(), batch, l_out))
            .expect("GEMM output is contiguous");
        (y, cols)
    }

    /// Gradients with respect to weight and bias and, when `need_input_grad`
    /// is set, with respect to the input.
    pub fn backward(
        &self,
        cols: &Array2<T>,
        dy: ArrayView3<'_, T>,
        in_len: usize,
        need_input_grad: bool,
    ) -> (Option<Array3<T>>, Array3<T>, Array1<T>) {
        let (c_out, batch, l_out) = dy.dim();
        let dy = dy.as_standard_layout();
        let dy2 = dy
            .view()
            .into_shape_with_order((c_out, batch * l_out))
            .expect("standard layout");
        let dw = dy2
            .dot(&cols.t())
            .into_shape_with_order(self.weight.raw_dim())
            .expect("GEMM output is contiguous");
        let db = dy2.sum_axis(Axis(1));
        let dx = need_input_grad.then(|| {
            let dcols = self.weight_matrix().t().dot(&dy2);
            self.col2im(&dcols, batch, in_len)
        });
        (dx, dw, db)
    }
}

/// Output indices `lo..hi` whose source `i*stride + offset` lies in `0..len`.
fn valid_range(offset: isize, stride: usize, len: usize, l_out: usize) -> (usize, usize) {
    let s = stride as isize;
    let lo = if offset >= 0 { 0 } else { ((-offset) + s - 1) / s };
    let last = len as isize - 1 - offset;
    let hi = if last < 0 { 0 } else { last / s + 1 };
    let lo = (lo as usize).min(l_out);
    (lo, (hi as usize).clamp(lo, l_out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array;

    /// Direct definition of the convolution, used as the oracle.
    fn naive(conv: &Conv1d<f64>, x: &Array3<f64>) -> Array3<f64> {
        let (c_in, batch, len) = x.dim();
        let l_out = conv.out_len(len);
        let pad = conv.padding() as isize;
        let mut y = Array3::zeros((conv.out_channels(), batch, l_out));
        for o in 0..conv.out_channels() {
            for b in 0..batch {
                for i in 0..l_out {
                    let mut acc = conv.bias[o];
                    for c in 0..c_in {
                        for j in 0..conv.kernel() {
                            let s = (i * conv.stride()) as isize + j as isize - pad;
                            if s >= 0 && (s as usize) < len {
                                acc += conv.weight[[o, c, j]] * x[[c, b, s as usize]];
                            }
                        }
                    }
                    y[[o, b, i]] = acc;
                }
            }
        }
        y
    }

    fn filled(conv: &mut Conv1d<f64>) {
        let n = conv.weight.len();
        conv.weight = Array::from_iter((0..n).map(|i| ((i * 37 % 17) as f64 - 8.0) / 9.0))
            .into_shape_with_order(conv.weight.raw_dim())
            .unwrap();
        conv.bias.iter_mut().enumerate().for_each(|(i, b)| *b = i as f64 * 0.1);
    }

    #[test]
    fn matches_direct_definition() {
        for &(c_in, c_out, k, stride, len) in &[
            (1, 3, 9, 1, 20),
            (3, 2, 7, 1, 16),
            (2, 8, 7, 4, 16),
            (4, 4, 3, 1, 5),
            (2, 3, 7, 2, 10),
        ] {
            let mut conv = Conv1d::zeros(c_in, c_out, k, stride);
            filled(&mut conv);
            let x = Array3::from_shape_fn((c_in, 2, len), |(c, b, i)| {
                ((c * 7 + b * 3 + i) as f64 * 0.37).sin()
            });
            let (y, _) = conv.forward(x.view());
            let oracle = naive(&conv, &x);
            assert_eq!(y.dim(), oracle.dim());
            for (a, b) in y.iter().zip(oracle.iter()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn same_padding_keeps_length_and_stride_divides() {
        let conv = Conv1d::<f32>::zeros(1, 1, 7, 1);
        assert_eq!(conv.out_len(1024), 1024);
        let conv = Conv1d::<f32>::zeros(1, 1, 7, 4);
        assert_eq!(conv.out_len(1024), 256);
        assert_eq!(conv.out_len(32), 8);
    }

    #[test]
    fn backward_is_adjoint_of_forward() {
        // <dy, conv(x)> - <dy, bias> = <conv^T dy, x>
        let mut conv = Conv1d::zeros(3, 5, 7, 2);
        filled(&mut conv);
        let x = Array3::from_shape_fn((3, 2, 12), |(c, b, i)| ((c + 2 * b + 3 * i) as f64).cos());
        let (y, cols) = conv.forward(x.view());
        let dy = Array3::from_shape_fn(y.raw_dim(), |(c, b, i)| ((c * b + i) as f64 * 0.5).sin());
        let (dx, dw, db) = conv.backward(&cols, dy.view(), 12, true);
        let dx = dx.unwrap();
        let bias_term: f64 = dy
            .axis_iter(Axis(0))
            .zip(conv.bias.iter())
            .map(|(row, b)| row.sum() * b)
            .sum();
        let lhs = (&dy * &y).sum() - bias_term;
        let rhs = (&dx * &x).sum();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
        // weights enter linearly too
        let rhs_w = (&dw * &conv.weight).sum();
        assert!((lhs - rhs_w).abs() < 1e-9);
        assert_eq!(db.len(), 5);
    }
}

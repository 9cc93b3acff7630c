//! Sample shuffle: the 1-D counterpart of pixel shuffle.

use ndarray::{Array3, ArrayView2, ArrayView3, NdFloat};

/// Interleaves the `r` columns of a `(M, r)` array into one sequence of
/// length `M * r`: `out[m * r + j] = t[m][j]`.
pub fn sample_shuffle<T: Copy>(t: ArrayView2<'_, T>) -> Vec<T> {
    t.rows().into_iter().flat_map(|row| row.to_vec()).collect()
}

/// Inverse of [`sample_shuffle`].
pub fn sample_unshuffle<T: Copy>(seq: &[T], r: usize) -> Option<ndarray::Array2<T>> {
    if r == 0 || seq.len() % r != 0 {
        return None;
    }
    ndarray::Array2::from_shape_vec((seq.len() / r, r), seq.to_vec()).ok()
}

/// Channel-to-time shuffle on `(C * r, B, L)` activations, giving
/// `(C, B, L * r)` with `out[c, b, m * r + j] = x[c * r + j, b, m]`.
pub fn shuffle_channels<T: NdFloat>(x: ArrayView3<'_, T>, r: usize) -> Array3<T> {
    let (cr, batch, len) = x.dim();
    assert!(r >= 1 && cr % r == 0, "channel count {cr} not divisible by {r}");
    let c = cr / r;
    let mut out = Array3::zeros((c, batch, len * r));
    for ci in 0..c {
        for b in 0..batch {
            let mut dst = out.slice_mut(ndarray::s![ci, b, ..]);
            for j in 0..r {
                let src = x.slice(ndarray::s![ci * r + j, b, ..]);
                for (m, &v) in src.iter().enumerate() {
                    dst[m * r + j] = v;
                }
            }
        }
    }
    out
}

/// Inverse of [`shuffle_channels`] (also its adjoint, being a permutation).
pub fn unshuffle_channels<T: NdFloat>(x: ArrayView3<'_, T>, r: usize) -> Array3<T> {
    let (c, batch, len_r) = x.dim();
    assert!(r >= 1 && len_r % r == 0, "length {len_r} not divisible by {r}");
    let len = len_r / r;
    let mut out = Array3::zeros((c * r, batch, len));
    for ci in 0..c {
        for b in 0..batch {
            let src = x.slice(ndarray::s![ci, b, ..]);
            for j in 0..r {
                let mut dst = out.slice_mut(ndarray::s![ci * r + j, b, ..]);
                for m in 0..len {
                    dst[m] = src[m * r + j];
                }
            }
        }
    }
    out
}

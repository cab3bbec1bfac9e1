//! Low-level numeric kernels: im2col 3x3 convolution, 2x2 max pooling, ReLU,
//! and the two matrix-product orderings the forward/backward passes need.
//! Inner loops run over contiguous slices with a fixed accumulation order, so
//! results are deterministic and autovectorize well.

use alloc::vec::Vec;

use crate::Real;

/// Reusable scratch buffers for one worker.
pub struct Workspace<F> {
    pub(crate) col: Vec<F>,
    pub(crate) act_a: Vec<F>,
    pub(crate) act_b: Vec<F>,
    pub(crate) pool_idx: Vec<u32>,
}

impl<F: Real> Default for Workspace<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> Workspace<F> {
    pub fn new() -> Self {
        Self {
            col: Vec::new(),
            act_a: Vec::new(),
            act_b: Vec::new(),
            pool_idx: Vec::new(),
        }
    }
}

pub(crate) fn resize_zeroed<F: Real>(buf: &mut Vec<F>, len: usize) {
    buf.clear();
    buf.resize(len, F::zero());
}

/// Unfolds a CHW image into the 3x3 patch matrix `col[(c*9 + ky*3 + kx)][r*w + x]`
/// with 1-pixel zero padding.
pub(crate) fn im2col3x3<F: Real>(input: &[F], channels: usize, h: usize, w: usize, col: &mut Vec<F>) {
    let spatial = h * w;
    resize_zeroed(col, channels * 9 * spatial);
    for c in 0..channels {
        let plane = &input[c * spatial..(c + 1) * spatial];
        for ky in 0..3 {
            for kx in 0..3 {
                let dst = &mut col[(c * 9 + ky * 3 + kx) * spatial..][..spatial];
                // Source row is r + ky - 1, source column x + kx - 1.
                let (x0, x1) = match kx {
                    0 => (1, w),
                    1 => (0, w),
                    _ => (0, w - 1),
                };
                for r in 0..h {
                    let sr = r + ky;
                    if sr < 1 || sr > h {
                        continue;
                    }
                    let sr = sr - 1;
                    dst[r * w + x0..r * w + x1]
                        .copy_from_slice(&plane[sr * w + x0 + kx - 1..sr * w + x1 + kx - 1]);
                }
            }
        }
    }
}

/// Folds patch-matrix gradients back onto the CHW input gradient
/// (the adjoint of [`im2col3x3`]). Accumulates into `dinput`.
pub(crate) fn col2im3x3<F: Real>(dcol: &[F], channels: usize, h: usize, w: usize, dinput: &mut [F]) {
    let spatial = h * w;
    for c in 0..channels {
        let plane = &mut dinput[c * spatial..(c + 1) * spatial];
        for ky in 0..3 {
            for kx in 0..3 {
                let src = &dcol[(c * 9 + ky * 3 + kx) * spatial..][..spatial];
                let (x0, x1) = match kx {
                    0 => (1, w),
                    1 => (0, w),
                    _ => (0, w - 1),
                };
                for r in 0..h {
                    let sr = r + ky;
                    if sr < 1 || sr > h {
                        continue;
                    }
                    let sr = sr - 1;
                    let dst = &mut plane[sr * w + x0 + kx - 1..sr * w + x1 + kx - 1];
                    let s = &src[r * w + x0..r * w + x1];
                    for (d, &v) in dst.iter_mut().zip(s) {
                        *d = *d + v;
                    }
                }
            }
        }
    }
}

/// `out[i][0..n] = bias[i] + sum_k a[i][k] * b[k][0..n]` — the convolution
/// forward product. Four output rows run together so each `b` row is loaded
/// once per block instead of once per row.
pub(crate) fn matmul_bias<F: Real>(
    out: &mut [F],
    a: &[F],
    b: &[F],
    bias: &[F],
    m: usize,
    k_dim: usize,
    n: usize,
) {
    let mut i = 0;
    while i + 4 <= m {
        let (head, rest) = out[i * n..].split_at_mut(n);
        let (r1, rest) = rest.split_at_mut(n);
        let (r2, r3full) = rest.split_at_mut(n);
        let r3 = &mut r3full[..n];
        head.fill(bias[i]);
        r1.fill(bias[i + 1]);
        r2.fill(bias[i + 2]);
        r3.fill(bias[i + 3]);
        for k in 0..k_dim {
            let a0 = a[i * k_dim + k];
            let a1 = a[(i + 1) * k_dim + k];
            let a2 = a[(i + 2) * k_dim + k];
            let a3 = a[(i + 3) * k_dim + k];
            let brow = &b[k * n..(k + 1) * n];
            for (((o0, o1), (o2, o3)), &bv) in head
                .iter_mut()
                .zip(r1.iter_mut())
                .zip(r2.iter_mut().zip(r3.iter_mut()))
                .zip(brow)
            {
                *o0 = *o0 + a0 * bv;
                *o1 = *o1 + a1 * bv;
                *o2 = *o2 + a2 * bv;
                *o3 = *o3 + a3 * bv;
            }
        }
        i += 4;
    }
    for i in i..m {
        let row = &mut out[i * n..(i + 1) * n];
        row.fill(bias[i]);
        let arow = &a[i * k_dim..(i + 1) * k_dim];
        for (k, &av) in arow.iter().enumerate() {
            let brow = &b[k * n..(k + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}

/// `out[k][0..n] += sum_i a[i][k] * b[i][0..n]` — transposed-A product used
/// for input gradients. Blocks of four `i` keep their `b` rows hot while a
/// whole sweep of output rows streams through.
pub(crate) fn matmul_at_acc<F: Real>(
    out: &mut [F],
    a: &[F],
    b: &[F],
    m: usize,
    k_dim: usize,
    n: usize,
) {
    let mut i = 0;
    while i + 4 <= m {
        let b0 = &b[i * n..(i + 1) * n];
        let b1 = &b[(i + 1) * n..(i + 2) * n];
        let b2 = &b[(i + 2) * n..(i + 3) * n];
        let b3 = &b[(i + 3) * n..(i + 4) * n];
        for k in 0..k_dim {
            let a0 = a[i * k_dim + k];
            let a1 = a[(i + 1) * k_dim + k];
            let a2 = a[(i + 2) * k_dim + k];
            let a3 = a[(i + 3) * k_dim + k];
            let orow = &mut out[k * n..(k + 1) * n];
            for (j, o) in orow.iter_mut().enumerate() {
                *o = *o + a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
            }
        }
        i += 4;
    }
    for i in i..m {
        let arow = &a[i * k_dim..(i + 1) * k_dim];
        let brow = &b[i * n..(i + 1) * n];
        for (k, &av) in arow.iter().enumerate() {
            let orow = &mut out[k * n..(k + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
}

/// `out[i][k] += dot(a[i][0..n], b[k][0..n])` — the weight-gradient product
/// `dW = dY . X^T`. Four `i` rows share each streamed `b` row.
pub(crate) fn matmul_abt_acc<F: Real>(
    out: &mut [F],
    a: &[F],
    b: &[F],
    m: usize,
    k_dim: usize,
    n: usize,
) {
    let mut i = 0;
    while i + 4 <= m {
        let a0 = &a[i * n..(i + 1) * n];
        let a1 = &a[(i + 1) * n..(i + 2) * n];
        let a2 = &a[(i + 2) * n..(i + 3) * n];
        let a3 = &a[(i + 3) * n..(i + 4) * n];
        for k in 0..k_dim {
            let brow = &b[k * n..(k + 1) * n];
            let mut acc = [[F::zero(); 8]; 4];
            let mut c = 0;
            while c + 8 <= n {
                for l in 0..8 {
                    let bv = brow[c + l];
                    acc[0][l] = acc[0][l] + a0[c + l] * bv;
                    acc[1][l] = acc[1][l] + a1[c + l] * bv;
                    acc[2][l] = acc[2][l] + a2[c + l] * bv;
                    acc[3][l] = acc[3][l] + a3[c + l] * bv;
                }
                c += 8;
            }
            let mut tail = [F::zero(); 4];
            for j in c..n {
                let bv = brow[j];
                tail[0] = tail[0] + a0[j] * bv;
                tail[1] = tail[1] + a1[j] * bv;
                tail[2] = tail[2] + a2[j] * bv;
                tail[3] = tail[3] + a3[j] * bv;
            }
            for (r, t) in tail.into_iter().enumerate() {
                let lanes = acc[r];
                let s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]))
                    + ((lanes[4] + lanes[5]) + (lanes[6] + lanes[7]));
                let o = &mut out[(i + r) * k_dim + k];
                *o = *o + s + t;
            }
        }
        i += 4;
    }
    for i in i..m {
        let arow = &a[i * n..(i + 1) * n];
        for k in 0..k_dim {
            let brow = &b[k * n..(k + 1) * n];
            let o = &mut out[i * k_dim + k];
            *o = *o + dot(arow, brow);
        }
    }
}

/// Dot product with eight independent accumulator lanes (fixed order,
/// SIMD-friendly).
pub(crate) fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let mut ai = a.chunks_exact(8);
    let mut bi = b.chunks_exact(8);
    for (ca, cb) in (&mut ai).zip(&mut bi) {
        for l in 0..8 {
            acc[l] = acc[l] + ca[l] * cb[l];
        }
    }
    let mut tail = F::zero();
    for (&x, &y) in ai.remainder().iter().zip(bi.remainder()) {
        tail = tail + x * y;
    }
    let s01 = acc[0] + acc[1];
    let s23 = acc[2] + acc[3];
    let s45 = acc[4] + acc[5];
    let s67 = acc[6] + acc[7];
    ((s01 + s23) + (s45 + s67)) + tail
}

pub(crate) fn relu_inplace<F: Real>(x: &mut [F]) {
    for v in x.iter_mut() {
        if *v < F::zero() {
            *v = F::zero();
        }
    }
}

/// Hidden activations are non-negative after ReLU; gates `dact` by the
/// activation sign (subgradient 0 at the kink).
pub(crate) fn relu_backward_inplace<F: Real>(dact: &mut [F], act: &[F]) {
    for (d, &a) in dact.iter_mut().zip(act) {
        if a <= F::zero() {
            *d = F::zero();
        }
    }
}

/// 2x2 stride-2 max pooling over a CHW map. Ties pick the first element in
/// (top-left, top-right, bottom-left, bottom-right) scan order, so the
/// backward routing is deterministic. Records the argmax spatial index.
pub(crate) fn maxpool2x2<F: Real>(
    input: &[F],
    channels: usize,
    h: usize,
    w: usize,
    out: &mut Vec<F>,
    idx: &mut Vec<u32>,
) {
    let oh = h / 2;
    let ow = w / 2;
    resize_zeroed(out, channels * oh * ow);
    idx.clear();
    idx.resize(channels * oh * ow, 0);
    for c in 0..channels {
        let plane = &input[c * h * w..(c + 1) * h * w];
        for r in 0..oh {
            for x in 0..ow {
                let base = (2 * r) * w + 2 * x;
                let candidates = [base, base + 1, base + w, base + w + 1];
                let mut best = candidates[0];
                let mut best_v = plane[best];
                for &cand in &candidates[1..] {
                    if plane[cand] > best_v {
                        best_v = plane[cand];
                        best = cand;
                    }
                }
                let o = (c * oh + r) * ow + x;
                out[o] = best_v;
                idx[o] = best as u32;
            }
        }
    }
}

/// Routes pooled gradients back to the argmax positions.
pub(crate) fn maxpool2x2_backward<F: Real>(
    dout: &[F],
    idx: &[u32],
    channels: usize,
    h: usize,
    w: usize,
    dinput: &mut Vec<F>,
) {
    let oh = h / 2;
    let ow = w / 2;
    resize_zeroed(dinput, channels * h * w);
    for c in 0..channels {
        let plane = &mut dinput[c * h * w..(c + 1) * h * w];
        for o in c * oh * ow..(c + 1) * oh * ow {
            plane[idx[o] as usize] = plane[idx[o] as usize] + dout[o];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn im2col_center_tap_is_identity() {
        let input: Vec<f32> = (0..2 * 3 * 4).map(|v| v as f32).collect();
        let mut col = Vec::new();
        im2col3x3(&input, 2, 3, 4, &mut col);
        // Tap (ky=1, kx=1) reproduces the plane.
        for c in 0..2 {
            let row = &col[(c * 9 + 4) * 12..(c * 9 + 4) * 12 + 12];
            assert_eq!(row, &input[c * 12..(c + 1) * 12]);
        }
        // Top-left tap of the first output pixel reads padding.
        assert_eq!(col[0], 0.0);
    }

    #[test]
    fn col2im_is_adjoint_of_im2col() {
        // <im2col(x), y> == <x, col2im(y)> for random-ish data.
        let (c, h, w) = (2usize, 4usize, 3usize);
        let x: Vec<f64> = (0..c * h * w).map(|v| (v as f64 * 0.7).sin()).collect();
        let mut col = Vec::new();
        im2col3x3(&x, c, h, w, &mut col);
        let y: Vec<f64> = (0..col.len()).map(|v| (v as f64 * 0.3).cos()).collect();
        let lhs: f64 = col.iter().zip(&y).map(|(&a, &b)| a * b).sum();
        let mut back = vec![0.0f64; x.len()];
        col2im3x3(&y, c, h, w, &mut back);
        let rhs: f64 = x.iter().zip(&back).map(|(&a, &b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn dot_matches_reference() {
        let a: Vec<f64> = (0..37).map(|v| v as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|v| (v as f64).cos()).collect();
        let reference: f64 = a.iter().zip(&b).map(|(&x, &y)| x * y).sum();
        assert!((dot(&a, &b) - reference).abs() < 1e-9);
    }

    #[test]
    fn maxpool_picks_max_and_routes_gradient() {
        #[rustfmt::skip]
        let input = vec![
            1.0f32, 2.0, 0.0, 0.0,
            3.0, 0.5, 0.0, 4.0,
        ];
        let mut out = Vec::new();
        let mut idx = Vec::new();
        maxpool2x2(&input, 1, 2, 4, &mut out, &mut idx);
        assert_eq!(out, vec![3.0, 4.0]);
        let mut dinput = Vec::new();
        maxpool2x2_backward(&[1.0, 2.0], &idx, 1, 2, 4, &mut dinput);
        assert_eq!(dinput, vec![0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn matmul_bias_small_case() {
        // a = [[1, 2], [0, 1]], b = [[1, 1, 0], [2, 0, 1]], bias = [10, 20].
        let mut out = vec![0.0f32; 6];
        matmul_bias(
            &mut out,
            &[1.0, 2.0, 0.0, 1.0],
            &[1.0, 1.0, 0.0, 2.0, 0.0, 1.0],
            &[10.0, 20.0],
            2,
            2,
            3,
        );
        assert_eq!(out, vec![15.0, 11.0, 12.0, 22.0, 20.0, 21.0]);
    }
}

//! Forward and backward passes through the shared convolution stack
//! (conv-relu, conv-relu-pool, conv-relu-pool, conv-relu) and the two heads:
//! the grouped projection of the embedding network and the single linear
//! unit of the pair proxy.

use alloc::vec::Vec;
use core::ops::Range;

use super::kernels::{
    col2im3x3, dot, im2col3x3, matmul_abt_acc, matmul_at_acc, matmul_bias, maxpool2x2,
    maxpool2x2_backward,
    relu_backward_inplace, relu_inplace, resize_zeroed, Workspace,
};
use super::{ModelParams, PairNetParams, ParamLayout, Side};
use crate::{Error, Real, Result};

/// Spatial dimensions seen by each conv layer: pooling halves the map after
/// layers 2 and 3.
fn layer_dims(h: usize, w: usize) -> [(usize, usize); 4] {
    [(h, w), (h, w), (h / 2, w / 2), (h / 4, w / 4)]
}

struct StackView<'a, F> {
    weights: [&'a [F]; 4],
    biases: [&'a [F]; 4],
    chans: [usize; 5],
}

fn stack_view<'a, F: Real>(
    data: &'a [F],
    layout: &ParamLayout,
    prefix: &str,
    chans: [usize; 5],
) -> Result<StackView<'a, F>> {
    let get = |name: alloc::string::String| -> Result<&'a [F]> {
        Ok(&data[layout.range(&name)?])
    };
    Ok(StackView {
        weights: [
            get(alloc::format!("{prefix}conv1.weight"))?,
            get(alloc::format!("{prefix}conv2.weight"))?,
            get(alloc::format!("{prefix}conv3.weight"))?,
            get(alloc::format!("{prefix}conv4.weight"))?,
        ],
        biases: [
            get(alloc::format!("{prefix}conv1.bias"))?,
            get(alloc::format!("{prefix}conv2.bias"))?,
            get(alloc::format!("{prefix}conv3.bias"))?,
            get(alloc::format!("{prefix}conv4.bias"))?,
        ],
        chans,
    })
}

/// Saved intermediate state of one forward pass, reused across samples to
/// avoid reallocation.
pub struct EmbedCache<F> {
    col: [Vec<F>; 4],
    act: [Vec<F>; 4],
    pool_idx: [Vec<u32>; 2],
}

impl<F: Real> Default for EmbedCache<F> {
    fn default() -> Self {
        Self {
            col: Default::default(),
            act: Default::default(),
            pool_idx: Default::default(),
        }
    }
}

/// Runs the conv stack, filling `cache`, and leaves the final post-ReLU
/// feature map in `cache.act[3]`.
fn stack_forward_cached<F: Real>(
    view: &StackView<'_, F>,
    input: &[F],
    h: usize,
    w: usize,
    cache: &mut EmbedCache<F>,
) {
    let dims = layer_dims(h, w);
    let mut pooled: Vec<F> = Vec::new();
    for layer in 0..4 {
        let (lh, lw) = dims[layer];
        let spatial = lh * lw;
        let cin = view.chans[layer];
        let cout = view.chans[layer + 1];
        // col/act are split borrows of different cache fields.
        let (cols, acts) = (&mut cache.col, &mut cache.act);
        let src: &[F] = match layer {
            0 => input,
            1 => &acts[0],
            _ => &pooled,
        };
        im2col3x3(src, cin, lh, lw, &mut cols[layer]);
        resize_zeroed(&mut acts[layer], cout * spatial);
        matmul_bias(
            &mut acts[layer],
            view.weights[layer],
            &cols[layer],
            view.biases[layer],
            cout,
            cin * 9,
            spatial,
        );
        relu_inplace(&mut acts[layer]);
        if layer == 1 || layer == 2 {
            let mut next = core::mem::take(&mut pooled);
            maxpool2x2(
                &acts[layer],
                cout,
                lh,
                lw,
                &mut next,
                &mut cache.pool_idx[layer - 1],
            );
            pooled = next;
        }
    }
}

/// Inference-only stack pass using ping-pong workspace buffers; returns the
/// final feature map in `ws.act_a`.
fn stack_forward<F: Real>(view: &StackView<'_, F>, input: &[F], h: usize, w: usize, ws: &mut Workspace<F>) {
    let dims = layer_dims(h, w);
    for layer in 0..4 {
        let (lh, lw) = dims[layer];
        let spatial = lh * lw;
        let cin = view.chans[layer];
        let cout = view.chans[layer + 1];
        {
            let src: &[F] = if layer == 0 { input } else { &ws.act_a };
            im2col3x3(src, cin, lh, lw, &mut ws.col);
        }
        resize_zeroed(&mut ws.act_b, cout * spatial);
        matmul_bias(
            &mut ws.act_b,
            view.weights[layer],
            &ws.col,
            view.biases[layer],
            cout,
            cin * 9,
            spatial,
        );
        relu_inplace(&mut ws.act_b);
        if layer == 1 || layer == 2 {
            let (act_a, act_b, pool_idx) = (&mut ws.act_a, &ws.act_b, &mut ws.pool_idx);
            maxpool2x2(act_b, cout, lh, lw, act_a, pool_idx);
        } else {
            core::mem::swap(&mut ws.act_a, &mut ws.act_b);
        }
    }
}

/// Backpropagates `dfinal` (gradient at the post-ReLU final feature map)
/// through the stack, accumulating parameter gradients into `grads` at the
/// layout offsets named by `prefix`.
#[allow(clippy::too_many_arguments)]
fn stack_backward<F: Real>(
    view: &StackView<'_, F>,
    layout: &ParamLayout,
    prefix: &str,
    cache: &EmbedCache<F>,
    dfinal: Vec<F>,
    h: usize,
    w: usize,
    grads: &mut [F],
) -> Result<()> {
    let dims = layer_dims(h, w);
    let mut dact = dfinal;
    let mut dcol: Vec<F> = Vec::new();
    for layer in (0..4).rev() {
        let (lh, lw) = dims[layer];
        let spatial = lh * lw;
        let cin = view.chans[layer];
        let cout = view.chans[layer + 1];

        // Gate by the stored post-ReLU activation.
        relu_backward_inplace(&mut dact, &cache.act[layer]);

        // Parameter gradients.
        let wr: Range<usize> = layout.range(&alloc::format!("{prefix}conv{}.weight", layer + 1))?;
        let br: Range<usize> = layout.range(&alloc::format!("{prefix}conv{}.bias", layer + 1))?;
        let k_dim = cin * 9;
        matmul_abt_acc(
            &mut grads[wr],
            &dact,
            &cache.col[layer],
            cout,
            k_dim,
            spatial,
        );
        {
            let db = &mut grads[br];
            for oc in 0..cout {
                let drow = &dact[oc * spatial..(oc + 1) * spatial];
                let mut s = F::zero();
                for &v in drow {
                    s = s + v;
                }
                db[oc] = db[oc] + s;
            }
        }

        if layer == 0 {
            break; // no input gradient needed
        }

        // Gradient w.r.t. this layer's input, via the patch matrix.
        resize_zeroed(&mut dcol, k_dim * spatial);
        matmul_at_acc(&mut dcol, view.weights[layer], &dact, cout, k_dim, spatial);
        let mut dinput = Vec::new();
        resize_zeroed(&mut dinput, cin * spatial);
        col2im3x3(&dcol, cin, lh, lw, &mut dinput);

        // Cross the pooling stage between layer-1 and layer where present.
        dact = if layer == 2 || layer == 3 {
            let (ph, pw) = dims[layer - 1];
            let mut routed = Vec::new();
            maxpool2x2_backward(
                &dinput,
                &cache.pool_idx[layer - 2],
                cin,
                ph,
                pw,
                &mut routed,
            );
            routed
        } else {
            dinput
        };
    }
    Ok(())
}

fn embed_input_len(params: &ModelParams<impl Real>) -> usize {
    let c = params.config();
    c.channels_in * c.piece_size * c.piece_size
}

fn check_input<F: Real>(len: usize, input: &[F]) -> Result<()> {
    if input.len() != len {
        return Err(Error::InvalidArgument(alloc::format!(
            "input length {} does not match expected {len}",
            input.len()
        )));
    }
    Ok(())
}

fn embed_chans(params: &ModelParams<impl Real>) -> [usize; 5] {
    let c = params.config();
    [
        c.channels_in,
        c.conv_channels[0],
        c.conv_channels[1],
        c.conv_channels[2],
        c.conv_channels[3],
    ]
}

/// Projects the final feature map through the grouped FC head. No
/// nonlinearity follows the projection.
fn grouped_projection<F: Real>(
    params: &ModelParams<F>,
    prefix: &str,
    feat: &[F],
) -> Result<Vec<F>> {
    let cfg = params.config();
    let group_in = cfg.group_input();
    let dg = cfg.embedding_dim / cfg.groups;
    let mut z = Vec::with_capacity(cfg.embedding_dim);
    for g in 0..cfg.groups {
        let w = params.tensor(&alloc::format!("{prefix}proj.{g}.weight"))?;
        let b = params.tensor(&alloc::format!("{prefix}proj.{g}.bias"))?;
        let slice = &feat[g * group_in..(g + 1) * group_in];
        for u in 0..dg {
            z.push(b[u] + dot(&w[u * group_in..(u + 1) * group_in], slice));
        }
    }
    Ok(z)
}

/// One embedding forward pass (inference path).
pub fn embed_forward<F: Real>(
    params: &ModelParams<F>,
    side: Side,
    input: &[F],
    ws: &mut Workspace<F>,
) -> Result<Vec<F>> {
    check_input(embed_input_len(params), input)?;
    let prefix = params.side_prefix(side);
    let s = params.config().piece_size;
    let view = stack_view(&params.data, params.layout(), prefix, embed_chans(params))?;
    stack_forward(&view, input, s, s, ws);
    grouped_projection(params, prefix, &ws.act_a)
}

/// Forward pass that records everything [`embed_backward`] needs. `cache`
/// buffers are reused across calls.
pub fn embed_forward_cached<F: Real>(
    params: &ModelParams<F>,
    side: Side,
    input: &[F],
    cache: &mut EmbedCache<F>,
) -> Result<Vec<F>> {
    check_input(embed_input_len(params), input)?;
    let prefix = params.side_prefix(side);
    let s = params.config().piece_size;
    let view = stack_view(&params.data, params.layout(), prefix, embed_chans(params))?;
    stack_forward_cached(&view, input, s, s, cache);
    grouped_projection(params, prefix, &cache.act[3])
}

/// Accumulates `d(loss)/d(params)` into `grads` for one sample, given the
/// embedding gradient `dz` and the cache of its forward pass.
pub fn embed_backward<F: Real>(
    params: &ModelParams<F>,
    side: Side,
    cache: &EmbedCache<F>,
    dz: &[F],
    grads: &mut [F],
) -> Result<()> {
    let cfg = params.config();
    if dz.len() != cfg.embedding_dim || grads.len() != params.layout().total {
        return Err(Error::InvalidArgument("gradient buffer shape mismatch".into()));
    }
    let prefix = params.side_prefix(side);
    let group_in = cfg.group_input();
    let dg = cfg.embedding_dim / cfg.groups;
    let feat = &cache.act[3];

    // Projection backward: bias, weight, and feature gradients.
    let mut dfeat = alloc::vec![F::zero(); feat.len()];
    for g in 0..cfg.groups {
        let wr = params.layout().range(&alloc::format!("{prefix}proj.{g}.weight"))?;
        let br = params.layout().range(&alloc::format!("{prefix}proj.{g}.bias"))?;
        let w = &params.data[wr.clone()];
        let feat_slice = &feat[g * group_in..(g + 1) * group_in];
        let dz_g = &dz[g * dg..(g + 1) * dg];
        {
            let db = &mut grads[br];
            for (o, &d) in db.iter_mut().zip(dz_g) {
                *o = *o + d;
            }
        }
        {
            let dw = &mut grads[wr];
            for (u, &d) in dz_g.iter().enumerate() {
                let row = &mut dw[u * group_in..(u + 1) * group_in];
                for (o, &f) in row.iter_mut().zip(feat_slice) {
                    *o = *o + d * f;
                }
            }
        }
        let dslice = &mut dfeat[g * group_in..(g + 1) * group_in];
        for (u, &d) in dz_g.iter().enumerate() {
            let row = &w[u * group_in..(u + 1) * group_in];
            for (o, &wv) in dslice.iter_mut().zip(row) {
                *o = *o + d * wv;
            }
        }
    }

    let s = cfg.piece_size;
    let view = stack_view(&params.data, params.layout(), prefix, embed_chans(params))?;
    stack_backward(&view, params.layout(), prefix, cache, dfeat, s, s, grads)
}

fn pair_chans(params: &PairNetParams<impl Real>) -> [usize; 5] {
    let c = params.config();
    [
        c.channels_in,
        c.conv_channels[0],
        c.conv_channels[1],
        c.conv_channels[2],
        c.conv_channels[3],
    ]
}

/// Scores one horizontally concatenated `S x 2S` pair input; lower raw
/// output is read as more compatible downstream.
pub fn pair_forward<F: Real>(
    params: &PairNetParams<F>,
    input: &[F],
    ws: &mut Workspace<F>,
) -> Result<F> {
    let cfg = params.config();
    let (h, w) = (cfg.piece_size, 2 * cfg.piece_size);
    check_input(cfg.channels_in * h * w, input)?;
    let view = stack_view(&params.data, params.layout(), "", pair_chans(params))?;
    stack_forward(&view, input, h, w, ws);
    let head_w = params.tensor("head.weight")?;
    let head_b = params.tensor("head.bias")?;
    Ok(head_b[0] + dot(head_w, &ws.act_a))
}

/// Cached pair forward plus backward, for the binary adjacency training of
/// the proxy. Returns the raw score.
pub fn pair_forward_cached<F: Real>(
    params: &PairNetParams<F>,
    input: &[F],
    cache: &mut EmbedCache<F>,
) -> Result<F> {
    let cfg = params.config();
    let (h, w) = (cfg.piece_size, 2 * cfg.piece_size);
    check_input(cfg.channels_in * h * w, input)?;
    let view = stack_view(&params.data, params.layout(), "", pair_chans(params))?;
    stack_forward_cached(&view, input, h, w, cache);
    let head_w = params.tensor("head.weight")?;
    let head_b = params.tensor("head.bias")?;
    Ok(head_b[0] + dot(head_w, &cache.act[3]))
}

pub fn pair_backward<F: Real>(
    params: &PairNetParams<F>,
    cache: &EmbedCache<F>,
    dscore: F,
    grads: &mut [F],
) -> Result<()> {
    if grads.len() != params.layout().total {
        return Err(Error::InvalidArgument("gradient buffer shape mismatch".into()));
    }
    let cfg = params.config();
    let (h, w) = (cfg.piece_size, 2 * cfg.piece_size);
    let feat = &cache.act[3];
    {
        let br = params.layout().range("head.bias")?;
        grads[br.start] = grads[br.start] + dscore;
    }
    let wr = params.layout().range("head.weight")?;
    let head_w = &params.data[wr.clone()];
    let mut dfeat = alloc::vec![F::zero(); feat.len()];
    for (o, &wv) in dfeat.iter_mut().zip(head_w) {
        *o = dscore * wv;
    }
    {
        let dw = &mut grads[wr];
        for (o, &f) in dw.iter_mut().zip(feat) {
            *o = *o + dscore * f;
        }
    }
    let view = stack_view(&params.data, params.layout(), "", pair_chans(params))?;
    stack_backward(&view, params.layout(), "", cache, dfeat, h, w, grads)
}

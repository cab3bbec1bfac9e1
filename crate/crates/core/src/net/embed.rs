//! Edge posing: materializing piece inputs for the embedding network and the
//! pair proxy, and the per-piece set of eight edge embeddings.

use alloc::vec::Vec;

use super::stack::embed_forward;
use super::{kernels::Workspace, ModelParams, Side};
use crate::piece::Piece;
use crate::{Real, Result};

/// Which element of a left-right pair an input stands for.
///
/// A piece's edge faces right after rotating the piece so, and left-role
/// inputs are additionally mirrored so the single shared network sees every
/// edge as a "left edge of the right piece". Twin networks skip the mirror
/// and use their own left model instead.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRole {
    LeftOfPair,
    RightOfPair,
}

impl EdgeRole {
    fn index(self) -> usize {
        match self {
            EdgeRole::LeftOfPair => 0,
            EdgeRole::RightOfPair => 1,
        }
    }
}

/// Rotates `p` by `rot` quarter turns and applies the role convention:
/// left-of-pair inputs are horizontally flipped unless a twin network is in
/// use.
pub fn pose_piece(p: &Piece, rot: u8, role: EdgeRole, twin: bool) -> Piece {
    let rotated = p.rotated(rot);
    match role {
        EdgeRole::RightOfPair => rotated,
        EdgeRole::LeftOfPair => {
            if twin {
                rotated
            } else {
                rotated.hflip()
            }
        }
    }
}

/// Interleaved piece data to planar CHW network input.
pub fn piece_to_input<F: Real>(p: &Piece) -> Vec<F> {
    let s = p.size();
    let ch = p.channels();
    let mut out = Vec::with_capacity(ch * s * s);
    for c in 0..ch {
        for r in 0..s {
            for x in 0..s {
                out.push(F::of_f32(p.get(r, x, c)));
            }
        }
    }
    out
}

/// Concatenates two pieces side by side into the `C x S x 2S` pair-proxy
/// input.
pub fn pair_input<F: Real>(left: &Piece, right: &Piece) -> Result<Vec<F>> {
    if left.size() != right.size() || left.channels() != right.channels() {
        return Err(crate::Error::SizeMismatch {
            left: left.size(),
            right: right.size(),
        });
    }
    let s = left.size();
    let ch = left.channels();
    let mut out = Vec::with_capacity(ch * s * 2 * s);
    for c in 0..ch {
        for r in 0..s {
            for x in 0..s {
                out.push(F::of_f32(left.get(r, x, c)));
            }
            for x in 0..s {
                out.push(F::of_f32(right.get(r, x, c)));
            }
        }
    }
    Ok(out)
}

/// The eight edge embeddings of one piece: every rotation in both roles.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEmbeddingSet {
    dim: usize,
    data: Vec<f32>,
}

impl EdgeEmbeddingSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, rot: u8, role: EdgeRole) -> &[f32] {
        let idx = (rot as usize % 4) * 2 + role.index();
        &self.data[idx * self.dim..(idx + 1) * self.dim]
    }

    pub fn vectors_mut(&mut self) -> impl Iterator<Item = &mut [f32]> {
        self.data.chunks_mut(self.dim)
    }
}

/// Embeds one piece with respect to all eight (rotation, role) poses —
/// exactly eight forward passes.
pub fn embed_edges(
    params: &ModelParams<f32>,
    piece: &Piece,
    ws: &mut Workspace<f32>,
) -> Result<EdgeEmbeddingSet> {
    let twin = params.config().twin;
    let dim = params.config().embedding_dim;
    let mut data = Vec::with_capacity(8 * dim);
    for rot in 0..4u8 {
        for role in [EdgeRole::LeftOfPair, EdgeRole::RightOfPair] {
            let posed = pose_piece(piece, rot, role, twin);
            let input: Vec<f32> = piece_to_input(&posed);
            let side = match (twin, role) {
                (true, EdgeRole::LeftOfPair) => Side::Left,
                _ => Side::Right,
            };
            data.extend(embed_forward(params, side, &input, ws)?);
        }
    }
    Ok(EdgeEmbeddingSet { dim, data })
}

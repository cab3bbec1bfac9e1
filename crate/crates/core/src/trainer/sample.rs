//! Triplet sampling over a corpus of cut images: intra/inter image mixing,
//! ground-truth adjacent anchor/positive pairs under random poses, and
//! random same-image negatives.

use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{EdgeId, TrainConfig};
use crate::puzzle::PieceGrid;
use crate::{Error, Result};

/// Training images, already cut (and eroded) into ground-truth piece grids.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub images: Vec<PieceGrid>,
}

impl Corpus {
    pub fn new(images: Vec<PieceGrid>) -> Self {
        Self { images }
    }
}

/// One anchor/positive/negative sample. Pieces are referenced by
/// (image, ground-truth index); `*_rot` is the pose rotation that brings the
/// sampled edge into the canonical left-right pair position (anchors face
/// right and are mirrored into left-role inputs, candidates face left).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TripletSample {
    pub image: u32,
    pub anchor_piece: u32,
    pub anchor_rot: u8,
    pub positive_piece: u32,
    pub positive_rot: u8,
    pub negative_piece: u32,
    pub negative_rot: u8,
    pub anchor_edge: EdgeId,
    pub positive_edge: EdgeId,
    pub negative_edge: EdgeId,
}

#[derive(Debug, Clone)]
pub struct TripletBatch {
    pub samples: Vec<TripletSample>,
}

/// Rotation that brings edge `dir` (0=right, 1=down, 2=left, 3=up) of an
/// unrotated piece to face left, i.e. into the candidate pose.
fn face_left_rotation(dir: u8) -> u8 {
    (dir + 2) % 4
}

/// Draws one triplet from image `img`. The anchor/positive pair is a
/// uniformly random ground-truth adjacency presented in a uniformly random
/// direction: horizontal pairs pose at rotations {0, 2}, vertical at {1, 3}.
/// The negative is a uniformly random same-image edge other than the
/// positive edge.
fn sample_one(grid: &PieceGrid, image: u32, rng: &mut ChaCha8Rng) -> TripletSample {
    let (rows, cols) = (grid.rows, grid.cols);
    let horizontal = rows * (cols - 1);
    let vertical = (rows - 1) * cols;
    let pick = rng.gen_range(0..horizontal + vertical);

    // (first, second) in board order; dir is the edge of `first` facing
    // `second`.
    let (first, second, dir) = if pick < horizontal {
        let r = pick / (cols - 1);
        let c = pick % (cols - 1);
        ((r * cols + c) as u32, (r * cols + c + 1) as u32, 0u8)
    } else {
        let v = pick - horizontal;
        let r = v / cols;
        let c = v % cols;
        ((r * cols + c) as u32, ((r + 1) * cols + c) as u32, 1u8)
    };

    // Read the same physical boundary from either side.
    let (anchor, positive, anchor_dir) = if rng.gen_bool(0.5) {
        (first, second, dir)
    } else {
        (second, first, dir + 2)
    };
    let positive_dir = (anchor_dir + 2) % 4;
    // Rotating by the edge direction brings the anchor's edge to face right;
    // the positive co-rotates so its opposite edge faces left.
    let anchor_rot = anchor_dir % 4;
    let positive_rot = face_left_rotation(positive_dir);
    debug_assert_eq!(anchor_rot, positive_rot);

    let n = grid.len() as u32;
    let positive_edge = EdgeId {
        image,
        piece: positive,
        dir: positive_dir,
    };
    let (negative_piece, negative_dir) = loop {
        let piece = rng.gen_range(0..n);
        let dir = rng.gen_range(0..4u8);
        if (piece, dir) != (positive, positive_dir) {
            break (piece, dir);
        }
    };

    TripletSample {
        image,
        anchor_piece: anchor,
        anchor_rot,
        positive_piece: positive,
        positive_rot,
        negative_piece,
        negative_rot: face_left_rotation(negative_dir),
        anchor_edge: EdgeId {
            image,
            piece: anchor,
            dir: anchor_dir,
        },
        positive_edge,
        negative_edge: EdgeId {
            image,
            piece: negative_piece,
            dir: negative_dir,
        },
    }
}

/// Assembles one batch: `round(intra_fraction * B)` samples from a single
/// random image, the rest spread one per distinct image (cycling once the
/// corpus is exhausted).
pub fn sample_triplets(
    corpus: &Corpus,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TripletBatch> {
    if corpus.images.is_empty() {
        return Err(Error::BadCorpus("no training images".into()));
    }
    for (i, g) in corpus.images.iter().enumerate() {
        if g.rows * (g.cols - 1) + (g.rows - 1) * g.cols < 2 {
            return Err(Error::BadCorpus(alloc::format!(
                "image {i} has fewer than 2 adjacent pairs"
            )));
        }
    }
    let b = cfg.batch;
    let intra = ((cfg.intra_fraction as f64 * b as f64) + 0.5).floor() as usize;
    let intra = intra.min(b);

    let mut samples = Vec::with_capacity(b);
    let intra_image = rng.gen_range(0..corpus.images.len());
    for _ in 0..intra {
        samples.push(sample_one(
            &corpus.images[intra_image],
            intra_image as u32,
            rng,
        ));
    }

    if intra < b {
        if corpus.images.len() < 2 {
            return Err(Error::BadCorpus(
                "inter sampling needs at least 2 images".into(),
            ));
        }
        let mut order: Vec<usize> = (0..corpus.images.len()).collect();
        order.shuffle(rng);
        let mut cursor = 0;
        for _ in intra..b {
            if cursor == order.len() {
                order.shuffle(rng);
                cursor = 0;
            }
            let img = order[cursor];
            cursor += 1;
            samples.push(sample_one(&corpus.images[img], img as u32, rng));
        }
    }

    Ok(TripletBatch { samples })
}

//! The training engine: triplet sampling, hard-batch mining, loss
//! evaluation, backpropagation through the embedding network, Adam with
//! plateau decay, and per-epoch validation.

mod adam;
mod loss;
mod pair;
mod sample;

pub use adam::AdamState;
pub use loss::{
    euclidean, hbt_loss, hbt_select, l2_reg, loss_backward, own_negatives, total_loss,
    triplet_loss, BatchEmbeddings, BatchGrads, Candidate,
};
pub use pair::{train_pair_scorer, PairTrainConfig};
pub use sample::{sample_triplets, Corpus, TripletBatch, TripletSample};

use alloc::vec;
use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cm::{compute_cm, top1_accuracy, Backend};
use crate::exec::{chunk_ranges, ParallelMap};
use crate::net::{
    embed_backward, embed_forward, embed_forward_cached, piece_to_input, pose_piece, EdgeRole,
    EmbedCache, ModelConfig, ModelParams, Side, Workspace,
};
use crate::puzzle::PuzzleBundle;
use crate::{Error, Result};

/// Globally unique identity of one piece edge: (image, ground-truth piece
/// index, edge direction 0..4).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeId {
    pub image: u32,
    pub piece: u32,
    pub dir: u8,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Triplet margin.
    pub margin: f32,
    /// Weight of the L2 embedding regularizer.
    pub lambda: f32,
    /// Triplets per batch.
    pub batch: usize,
    pub learning_rate: f32,
    /// Multiplier applied after `plateau_epochs` without improvement.
    pub lr_decay: f32,
    pub plateau_epochs: usize,
    pub iters_per_epoch: usize,
    pub epochs: usize,
    /// Fraction of the batch drawn from a single image.
    pub intra_fraction: f32,
    /// Hard-batch mining on/off (off = plain triplet loss).
    pub hbt_enabled: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            lambda: 1.0,
            batch: 1024,
            learning_rate: 1e-4,
            lr_decay: 0.9,
            plateau_epochs: 5,
            iters_per_epoch: 5000,
            epochs: 20,
            intra_fraction: 0.5,
            hbt_enabled: true,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || (self.hbt_enabled && self.batch < 2) {
            return Err(Error::InvalidConfig(
                "batch must be >= 2 with hard-batch mining".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.intra_fraction) {
            return Err(Error::InvalidConfig("intra_fraction outside [0, 1]".into()));
        }
        if self.iters_per_epoch == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("zero epochs or iterations".into()));
        }
        Ok(())
    }
}

/// One line of the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f32,
    pub val_top1_type1: Option<f64>,
    pub val_top1_type2: Option<f64>,
}

pub struct TrainOutput {
    pub params: ModelParams<f32>,
    pub history: Vec<EpochStats>,
}

/// The three materialized network inputs of one triplet, in left-role /
/// right-role / right-role poses.
fn materialize(corpus: &Corpus, s: &TripletSample, twin: bool) -> [Vec<f32>; 3] {
    let grid = &corpus.images[s.image as usize];
    let anchor = pose_piece(
        &grid.pieces[s.anchor_piece as usize],
        s.anchor_rot,
        EdgeRole::LeftOfPair,
        twin,
    );
    let positive = pose_piece(
        &grid.pieces[s.positive_piece as usize],
        s.positive_rot,
        EdgeRole::RightOfPair,
        twin,
    );
    let negative = pose_piece(
        &grid.pieces[s.negative_piece as usize],
        s.negative_rot,
        EdgeRole::RightOfPair,
        twin,
    );
    [
        piece_to_input(&anchor),
        piece_to_input(&positive),
        piece_to_input(&negative),
    ]
}

/// Runs one optimization step on `batch` and returns its total loss.
pub fn train_step(
    params: &mut ModelParams<f32>,
    corpus: &Corpus,
    batch: &TripletBatch,
    cfg: &TrainConfig,
    adam: &mut AdamState<f32>,
    lr: f32,
    mapper: &impl ParallelMap,
) -> Result<f64> {
    let b = batch.samples.len();
    let dim = params.config().embedding_dim;
    let twin = params.config().twin;
    let anchor_side = if twin { Side::Left } else { Side::Right };

    // Forward pass over all 3B inputs, chunked.
    let chunks = chunk_ranges(b, mapper.chunk_count());
    let fwd: Vec<Result<Vec<[Vec<f32>; 3]>>> = {
        let p: &ModelParams<f32> = params;
        mapper.map(chunks.len(), |ci| {
            let mut ws = Workspace::new();
            let mut out = Vec::with_capacity(chunks[ci].len());
            for s in &batch.samples[chunks[ci].clone()] {
                let [ia, ip, info] = materialize(corpus, s, twin);
                let za = embed_forward(p, anchor_side, &ia, &mut ws)?;
                let zp = embed_forward(p, Side::Right, &ip, &mut ws)?;
                let zn = embed_forward(p, Side::Right, &info, &mut ws)?;
                out.push([za, zp, zn]);
            }
            Ok(out)
        })
    };

    let mut emb = BatchEmbeddings {
        batch: b,
        dim,
        anchors: Vec::with_capacity(b * dim),
        positives: Vec::with_capacity(b * dim),
        negatives: Vec::with_capacity(b * dim),
        positive_edges: batch.samples.iter().map(|s| s.positive_edge).collect(),
        negative_edges: batch.samples.iter().map(|s| s.negative_edge).collect(),
    };
    for chunk in fwd {
        for [za, zp, zn] in chunk? {
            emb.anchors.extend(za);
            emb.positives.extend(zp);
            emb.negatives.extend(zn);
        }
    }

    let selection = if cfg.hbt_enabled {
        hbt_select(&emb)?
    } else {
        own_negatives(b)
    };
    let loss = total_loss(&emb, &selection, cfg.margin, cfg.lambda);
    let grads_z = loss_backward(&emb, &selection, cfg.margin, cfg.lambda);

    // Backward pass: recompute each sample's forward with a cache and
    // accumulate parameter gradients per chunk, then fold in chunk order.
    let grad_chunks: Vec<Result<Vec<f32>>> = {
        let p: &ModelParams<f32> = params;
        mapper.map(chunks.len(), |ci| {
            let mut cache = EmbedCache::default();
            let mut grads = vec![0.0f32; p.layout().total];
            for (off, s) in chunks[ci].clone().zip(&batch.samples[chunks[ci].clone()]) {
                let [ia, ip, info] = materialize(corpus, s, twin);
                let jobs: [(&Vec<f32>, &[f32], Side); 3] = [
                    (&ia, &grads_z.danchors[off * dim..(off + 1) * dim], anchor_side),
                    (&ip, &grads_z.dpositives[off * dim..(off + 1) * dim], Side::Right),
                    (&info, &grads_z.dnegatives[off * dim..(off + 1) * dim], Side::Right),
                ];
                for (input, dz, side) in jobs {
                    if dz.iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let _ = embed_forward_cached(p, side, input, &mut cache)?;
                    embed_backward(p, side, &cache, dz, &mut grads)?;
                }
            }
            Ok(grads)
        })
    };
    let mut total_grads = vec![0.0f32; params.layout().total];
    for chunk in grad_chunks {
        for (o, g) in total_grads.iter_mut().zip(chunk?) {
            *o += g;
        }
    }

    adam.step(&mut params.data, &total_grads, lr);
    Ok(loss as f64)
}

/// Trains an embedding network on `corpus` from a seeded initialization.
///
/// Adam with the configured learning rate; the rate decays by `lr_decay`
/// whenever the epoch-mean loss fails to strictly improve for
/// `plateau_epochs` consecutive epochs. Validation bundles get Type-1 and
/// Type-2 Top-1 computed per epoch. Deterministic for a fixed seed and
/// mapper chunk count.
pub fn train(
    corpus: &Corpus,
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    validation: &[PuzzleBundle],
    mapper: &impl ParallelMap,
    on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutput> {
    let params = ModelParams::init(model_cfg, cfg.seed)?;
    train_from(params, corpus, cfg, validation, mapper, on_epoch)
}

/// [`train`] from explicitly given starting parameters (checkpoint resume).
/// Optimizer state starts fresh.
pub fn train_from(
    params: ModelParams<f32>,
    corpus: &Corpus,
    cfg: &TrainConfig,
    validation: &[PuzzleBundle],
    mapper: &impl ParallelMap,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutput> {
    cfg.validate()?;
    let mut params = params;
    let mut adam = AdamState::new(params.layout().total);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9E37_79B9_7F4A_7C15);
    let mut lr = cfg.learning_rate;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut sum = 0.0f64;
        for iteration in 0..cfg.iters_per_epoch {
            let batch = sample_triplets(corpus, cfg, &mut rng)?;
            let loss = train_step(&mut params, corpus, &batch, cfg, &mut adam, lr, mapper)?;
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch, iteration });
            }
            sum += loss;
        }
        let mean_loss = sum / cfg.iters_per_epoch as f64;

        if mean_loss < best {
            best = mean_loss;
            stall = 0;
        } else {
            stall += 1;
            if stall >= cfg.plateau_epochs {
                lr *= cfg.lr_decay;
                stall = 0;
            }
        }

        let (mut t1, mut t2) = (None, None);
        if !validation.is_empty() {
            let (mut a1, mut a2) = (0.0f64, 0.0f64);
            for b in validation {
                let (tensor, _) = compute_cm(b, &Backend::Embedding(&params), mapper)?;
                a1 += top1_accuracy(&tensor, b)?;
                a2 += type2_top1_on(&params, b, mapper)?;
            }
            t1 = Some(a1 / validation.len() as f64);
            t2 = Some(a2 / validation.len() as f64);
        }

        let stats = EpochStats {
            epoch,
            mean_loss,
            lr,
            val_top1_type1: t1,
            val_top1_type2: t2,
        };
        on_epoch(&stats);
        history.push(stats);
    }

    Ok(TrainOutput { params, history })
}

/// Type-2 Top-1 on a bundle regardless of how it was scrambled: rebuilds the
/// tensor with all 16 rotation combinations.
fn type2_top1_on(
    params: &ModelParams<f32>,
    bundle: &PuzzleBundle,
    mapper: &impl ParallelMap,
) -> Result<f64> {
    let mut as_type2 = bundle.clone();
    as_type2.problem_type = crate::puzzle::ProblemType::Type2;
    let (tensor, _) = compute_cm(&as_type2, &Backend::Embedding(params), mapper)?;
    top1_accuracy(&tensor, &as_type2)
}

//! Binary adjacent/non-adjacent training for the end-to-end pair proxy.
//! The proxy only serves the cost comparison and a desk-scale accuracy
//! baseline, so its trainer is deliberately small: logistic loss on raw pair
//! scores, adjacent pairs labeled 0 (compatible = low score).

use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::adam::AdamState;
use super::Corpus;
use crate::exec::{chunk_ranges, ParallelMap};
use crate::net::{pair_backward, pair_forward_cached, pair_input, EmbedCache};
use crate::net::{PairNetConfig, PairNetParams};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PairTrainConfig {
    pub batch: usize,
    pub learning_rate: f32,
    pub steps: usize,
    pub seed: u64,
}

impl Default for PairTrainConfig {
    fn default() -> Self {
        Self {
            batch: 64,
            learning_rate: 1e-4,
            steps: 1000,
            seed: 0,
        }
    }
}

fn sigmoid(x: f32) -> f32 {
    1.0 / (1.0 + (-x).exp())
}

/// One training pair: pieces by (image, gt index, rotation) plus the label
/// (false = ground-truth adjacent).
#[derive(Debug, Clone, Copy)]
struct PairSample {
    image: u32,
    left: u32,
    left_rot: u8,
    right: u32,
    right_rot: u8,
    non_adjacent: bool,
}

fn sample_pair(corpus: &Corpus, rng: &mut ChaCha8Rng) -> PairSample {
    let image = rng.gen_range(0..corpus.images.len());
    let grid = &corpus.images[image];
    let (rows, cols) = (grid.rows, grid.cols);
    let non_adjacent = rng.gen_bool(0.5);
    if non_adjacent {
        let n = grid.len() as u32;
        let left = rng.gen_range(0..n);
        let right = loop {
            let r = rng.gen_range(0..n);
            if r != left {
                break r;
            }
        };
        PairSample {
            image: image as u32,
            left,
            left_rot: rng.gen_range(0..4),
            right,
            right_rot: rng.gen_range(0..4),
            non_adjacent: true,
        }
    } else {
        let horizontal = rows * (cols - 1);
        let vertical = (rows - 1) * cols;
        let pick = rng.gen_range(0..horizontal + vertical);
        let (left, right, rot) = if pick < horizontal {
            let r = pick / (cols - 1);
            let c = pick % (cols - 1);
            ((r * cols + c) as u32, (r * cols + c + 1) as u32, 0u8)
        } else {
            let v = pick - horizontal;
            let r = v / cols;
            let c = v % cols;
            ((r * cols + c) as u32, ((r + 1) * cols + c) as u32, 1u8)
        };
        PairSample {
            image: image as u32,
            left,
            left_rot: rot,
            right,
            right_rot: rot,
            non_adjacent: false,
        }
    }
}

/// Trains the pair proxy with logistic regression on adjacency labels.
/// Returns the parameters and the per-step mean losses.
pub fn train_pair_scorer(
    corpus: &Corpus,
    config: PairNetConfig,
    cfg: &PairTrainConfig,
    mapper: &impl ParallelMap,
) -> Result<(PairNetParams<f32>, Vec<f64>)> {
    if corpus.images.is_empty() {
        return Err(Error::BadCorpus("no training images".into()));
    }
    let mut params = PairNetParams::init(config, cfg.seed)?;
    let mut adam = AdamState::new(params.layout().total);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x517C_C1B7_2722_0A95);
    let mut losses = Vec::with_capacity(cfg.steps);

    for step in 0..cfg.steps {
        let samples: Vec<PairSample> = (0..cfg.batch).map(|_| sample_pair(corpus, &mut rng)).collect();
        let chunks = chunk_ranges(samples.len(), mapper.chunk_count());
        let results: Vec<Result<(Vec<f32>, f64)>> = {
            let p: &PairNetParams<f32> = &params;
            mapper.map(chunks.len(), |ci| {
                let mut cache = EmbedCache::default();
                let mut grads = vec![0.0f32; p.layout().total];
                let mut loss = 0.0f64;
                for s in &samples[chunks[ci].clone()] {
                    let grid = &corpus.images[s.image as usize];
                    let left = grid.pieces[s.left as usize].rotated(s.left_rot);
                    let right = grid.pieces[s.right as usize].rotated(s.right_rot);
                    let input: Vec<f32> = pair_input(&left, &right)?;
                    let score = pair_forward_cached(p, &input, &mut cache)?;
                    let prob = sigmoid(score);
                    let label = f32::from(u8::from(s.non_adjacent));
                    loss += -f64::from(
                        label * prob.max(1e-12).ln()
                            + (1.0 - label) * (1.0 - prob).max(1e-12).ln(),
                    );
                    let dscore = (prob - label) / samples.len() as f32;
                    pair_backward(p, &cache, dscore, &mut grads)?;
                }
                Ok((grads, loss))
            })
        };
        let mut total_grads = vec![0.0f32; params.layout().total];
        let mut loss = 0.0f64;
        for r in results {
            let (g, l) = r?;
            loss += l;
            for (o, v) in total_grads.iter_mut().zip(g) {
                *o += v;
            }
        }
        let mean = loss / samples.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Diverged {
                epoch: 0,
                iteration: step,
            });
        }
        adam.step(&mut params.data, &total_grads, cfg.learning_rate);
        losses.push(mean);
    }
    Ok((params, losses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::image::Image;
    use crate::puzzle::cut_puzzle;

    #[test]
    fn pair_training_reduces_loss_on_a_tiny_corpus() {
        let images = (0..2)
            .map(|i| {
                let data = (0..24 * 24 * 3)
                    .map(|v| ((v * 13 + i * 57) % 251) as f32 / 255.0)
                    .collect();
                cut_puzzle(&Image::new(24, 24, 3, data).unwrap(), 8, None).unwrap()
            })
            .collect();
        let corpus = Corpus::new(images);
        let cfg = PairTrainConfig {
            batch: 8,
            steps: 30,
            learning_rate: 3e-3,
            seed: 5,
        };
        let config = PairNetConfig {
            piece_size: 8,
            channels_in: 3,
            conv_channels: [2, 2, 2, 2],
        };
        let (_, losses) = train_pair_scorer(&corpus, config, &cfg, &Sequential).unwrap();
        let head: f64 = losses[..5].iter().sum::<f64>() / 5.0;
        let tail: f64 = losses[losses.len() - 5..].iter().sum::<f64>() / 5.0;
        assert!(tail < head, "no learning signal: {head} -> {tail}");
    }
}

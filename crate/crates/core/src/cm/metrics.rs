//! Evaluation metrics over score tensors: Top-1 edge accuracy, the
//! feature-masking robustness curve, and the anchor/candidate distance map.

use alloc::vec::Vec;

use crate::exec::ParallelMap;
use crate::net::{embed_edges, EdgeEmbeddingSet, ModelParams, Workspace};
use crate::puzzle::{Dir, ProblemType, PuzzleBundle};
use crate::{Error, Result};

use super::{fill_from_embeddings, pose_pairs, CmTensor};

/// Candidate rotations scanned per anchor edge.
fn candidate_rotations(problem_type: ProblemType) -> &'static [u8] {
    match problem_type {
        ProblemType::Type1 => &[0],
        ProblemType::Type2 => &[0, 1, 2, 3],
    }
}

/// Score of candidate `(j, r)` against the stored edge `d` of piece `s`
/// (both pieces in their as-given orientations).
#[inline]
fn edge_candidate_score(t: &CmTensor, s: usize, d: u8, j: usize, r: u8) -> f32 {
    match d {
        0 => t.get(s, 0, j, r),                       // j right of s
        1 => t.get(s, 1, j, (r + 1) % 4),             // j below s
        2 => t.get(j, r, s, 0),                       // j left of s
        _ => t.get(j, (r + 1) % 4, s, 1),             // j above s
    }
}

/// Fraction of piece edges whose most compatible candidate is the
/// ground-truth neighboring edge (location for Type-1, location and rotation
/// for Type-2). Candidates are the `N-1` pieces (Type-1) or `4(N-1)`
/// piece-rotations (Type-2); ties resolve to the lowest (piece, rotation)
/// scan index, so a tied ground truth only counts when it is that winner.
pub fn top1_accuracy(t: &CmTensor, bundle: &PuzzleBundle) -> Result<f64> {
    if t.n() != bundle.len() {
        return Err(Error::TensorMismatch {
            tensor_n: t.n(),
            puzzle_n: bundle.len(),
        });
    }
    let n = bundle.len();
    let rotations = candidate_rotations(t.problem_type());
    let mut hits = 0u64;
    let mut total = 0u64;
    for s in 0..n {
        for d in 0..4u8 {
            let board_dir = Dir::from_index(d + bundle.rotations[s]);
            let Some(neighbor) = bundle.gt_neighbor(s, board_dir) else {
                continue;
            };
            let want_rot = if t.problem_type() == ProblemType::Type1 {
                0
            } else {
                (4 + bundle.rotations[s] - bundle.rotations[neighbor]) % 4
            };
            total += 1;
            let mut best = f32::INFINITY;
            let mut winner = None;
            for j in 0..n {
                if j == s {
                    continue;
                }
                for &r in rotations {
                    let v = edge_candidate_score(t, s, d, j, r);
                    if v < best {
                        best = v;
                        winner = Some((j, r));
                    }
                }
            }
            if winner == Some((neighbor, want_rot)) {
                hits += 1;
            }
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(hits as f64 / total as f64)
}

/// One point of the masking-robustness curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskPoint {
    pub fraction: f32,
    pub top1: f64,
    /// Top-1 relative to the unmasked embeddings.
    pub retention: f64,
}

fn mask_largest(set: &EdgeEmbeddingSet, count: usize) -> EdgeEmbeddingSet {
    let mut out = set.clone();
    for vec in out.vectors_mut() {
        let mut idx: Vec<usize> = (0..vec.len()).collect();
        idx.sort_by(|&a, &b| {
            vec[b]
                .abs()
                .partial_cmp(&vec[a].abs())
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        for &i in idx.iter().take(count) {
            vec[i] = 0.0;
        }
    }
    out
}

/// Zeroes the `round(f * d)` largest-magnitude components of every edge
/// embedding independently, recomputes the score tensor, and reports Top-1
/// retention relative to the unmasked model. Fractions above 0.5 are
/// rejected.
pub fn mask_and_remeasure(
    params: &ModelParams<f32>,
    bundle: &PuzzleBundle,
    fractions: &[f32],
    mapper: &impl ParallelMap,
) -> Result<Vec<MaskPoint>> {
    if let Some(&bad) = fractions.iter().find(|&&f| !(0.0..=0.5).contains(&f)) {
        return Err(Error::InvalidArgument(alloc::format!(
            "masking fraction {bad} outside [0, 0.5]"
        )));
    }
    bundle.validate()?;
    let n = bundle.len();
    let combos = pose_pairs(bundle.problem_type);
    let sets: Vec<Result<EdgeEmbeddingSet>> = mapper.map(n, |i| {
        let mut ws = Workspace::new();
        embed_edges(params, &bundle.pieces[i], &mut ws)
    });
    let sets = sets.into_iter().collect::<Result<Vec<_>>>()?;

    let dim = params.config().embedding_dim;
    let mut tensor = CmTensor::new_sentinel(n, bundle.problem_type);
    fill_from_embeddings(&mut tensor, &sets, &combos, mapper);
    let baseline = top1_accuracy(&tensor, bundle)?;

    let mut out = Vec::with_capacity(fractions.len());
    for &f in fractions {
        let count = ((f as f64 * dim as f64) + 0.5).floor() as usize;
        let masked: Vec<EdgeEmbeddingSet> = sets.iter().map(|s| mask_largest(s, count)).collect();
        let mut t = CmTensor::new_sentinel(n, bundle.problem_type);
        fill_from_embeddings(&mut t, &masked, &combos, mapper);
        let top1 = top1_accuracy(&t, bundle)?;
        out.push(MaskPoint {
            fraction: f,
            top1,
            retention: if baseline > 0.0 { top1 / baseline } else { 0.0 },
        });
    }
    Ok(out)
}

/// The right-adjacency scores at rotation 0 with pieces reordered by ground
/// truth, as an `n x n` row-major matrix (diagonal and unpopulated slots are
/// `+inf`). Row = anchor, column = candidate; in a good measure the
/// superdiagonal holds the smallest scores.
pub fn distance_map_gt_order(t: &CmTensor, bundle: &PuzzleBundle) -> Result<Vec<f32>> {
    if t.n() != bundle.len() {
        return Err(Error::TensorMismatch {
            tensor_n: t.n(),
            puzzle_n: bundle.len(),
        });
    }
    let n = bundle.len();
    let mut by_cell = alloc::vec![0usize; n];
    for s in 0..n {
        by_cell[bundle.permutation[s]] = s;
    }
    let mut out = alloc::vec![f32::INFINITY; n * n];
    for gi in 0..n {
        for gj in 0..n {
            if gi == gj {
                continue;
            }
            out[gi * n + gj] = t.get(by_cell[gi], 0, by_cell[gj], 0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cm::{compute_cm, Backend};
    use crate::exec::Sequential;
    use crate::image::Image;
    use crate::puzzle::{cut_puzzle, scramble};

    fn bundle(rows: usize, cols: usize, pt: ProblemType, seed: u64) -> PuzzleBundle {
        let data = (0..rows * 8 * cols * 8 * 3)
            .map(|v| ((v * 13 + 5) % 247) as f32 / 255.0)
            .collect();
        let img = Image::new(rows * 8, cols * 8, 3, data).unwrap();
        let grid = cut_puzzle(&img, 8, None).unwrap();
        scramble(&grid, pt, seed, "test")
    }

    #[test]
    fn oracle_cm_scores_perfect_top1_both_types() {
        for pt in [ProblemType::Type1, ProblemType::Type2] {
            let b = bundle(3, 3, pt, 11);
            let (t, _) = compute_cm(&b, &Backend::Oracle, &Sequential).unwrap();
            assert_eq!(top1_accuracy(&t, &b).unwrap(), 1.0);
        }
    }

    #[test]
    fn adversarial_cm_scores_zero() {
        let b = bundle(2, 3, ProblemType::Type1, 3);
        let (t, _) = compute_cm(&b, &Backend::Oracle, &Sequential).unwrap();
        // Invert the oracle: ground truth 1, everything else 0.
        let inverted: Vec<f32> = t
            .raw()
            .iter()
            .map(|&v| if v.is_finite() { 1.0 - v } else { v })
            .collect();
        let t = CmTensor::from_raw(t.n(), t.problem_type(), inverted).unwrap();
        assert_eq!(top1_accuracy(&t, &b).unwrap(), 0.0);
    }

    #[test]
    fn distance_map_highlights_the_superdiagonal_under_oracle() {
        let b = bundle(2, 3, ProblemType::Type1, 9);
        let (t, _) = compute_cm(&b, &Backend::Oracle, &Sequential).unwrap();
        let n = b.len();
        let map = distance_map_gt_order(&t, &b).unwrap();
        assert_eq!(map.len(), n * n);
        for gi in 0..n {
            // Ground-truth cells gi and gi+1 are horizontal neighbors unless
            // gi ends a row.
            if (gi + 1) % 3 == 0 {
                continue;
            }
            let row: Vec<f32> = (0..n)
                .filter(|&gj| gj != gi)
                .map(|gj| map[gi * n + gj])
                .collect();
            let mean = row.iter().sum::<f32>() / row.len() as f32;
            assert!(map[gi * n + gi + 1] < mean);
        }
    }

    #[test]
    fn mask_fraction_zero_retains_everything() {
        let params = ModelParams::init(
            crate::net::ModelConfig {
                piece_size: 8,
                channels_in: 3,
                conv_channels: [2, 2, 4, 4],
                embedding_dim: 8,
                groups: 2,
                twin: false,
            },
            3,
        )
        .unwrap();
        let b = bundle(2, 2, ProblemType::Type1, 4);
        let points = mask_and_remeasure(&params, &b, &[0.0, 0.25], &Sequential).unwrap();
        assert_eq!(points[0].retention, 1.0);
        assert!(mask_and_remeasure(&params, &b, &[0.6], &Sequential).is_err());
    }
}

//! Score post-processing: per-anchor min-max scaling, the mirror-pose
//! symmetrization, and the second-best confidence rescaling used before
//! greedy reconstruction. Applied in that order when all three are wanted.

use crate::puzzle::ProblemType;

use super::CmTensor;

/// Degeneracies encountered while post-processing.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PostStats {
    /// Anchor rows whose finite entries were all equal (mapped to zero).
    pub constant_rows: usize,
    /// Anchor rows whose second-best score was zero (epsilon added).
    pub zero_second_best: usize,
}

fn anchor_rotations(problem_type: ProblemType) -> &'static [u8] {
    match problem_type {
        ProblemType::Type1 => &[0, 1],
        ProblemType::Type2 => &[0, 1, 2, 3],
    }
}

/// Per anchor row `(i, r_i)`: maps finite scores affinely onto `[0, 1]`.
/// Rows whose entries are all equal become all-zero (neutral) and are
/// counted in the stats.
pub fn minmax_scale(t: &mut CmTensor) -> PostStats {
    let mut stats = PostStats::default();
    let n = t.n();
    for i in 0..n {
        for &ri in anchor_rotations(t.problem_type()) {
            let row = t.row_mut(i, ri);
            let mut min = f32::INFINITY;
            let mut max = f32::NEG_INFINITY;
            for &v in row.iter() {
                if v.is_finite() {
                    min = min.min(v);
                    max = max.max(v);
                }
            }
            if !min.is_finite() {
                continue; // empty row (N = 1)
            }
            if max > min {
                let span = max - min;
                for v in row.iter_mut() {
                    if v.is_finite() {
                        *v = (*v - min) / span;
                    }
                }
            } else {
                stats.constant_rows += 1;
                for v in row.iter_mut() {
                    if v.is_finite() {
                        *v = 0.0;
                    }
                }
            }
        }
    }
    stats
}

/// Mirror pose of `(i, ri, j, rj)`: the same physical adjacency read from
/// the candidate's perspective, i.e. the 180° conjugate
/// `(j, rj + 2, i, ri + 2)`.
///
/// A Type-1 tensor has no rotated slots: there each physical boundary owns
/// exactly one entry, both directional readings resolve to it, and the
/// mirror is the pose itself.
pub fn mirror_pose(
    problem_type: ProblemType,
    i: usize,
    ri: u8,
    j: usize,
    rj: u8,
) -> (usize, u8, usize, u8) {
    match problem_type {
        ProblemType::Type2 => (j, (rj + 2) % 4, i, (ri + 2) % 4),
        ProblemType::Type1 => (i, ri, j, rj),
    }
}

/// Averages every score with its mirror pose and writes the mean to both
/// slots, so the mirror identity holds exactly afterwards. Type-1 tensors
/// already satisfy it and pass through unchanged.
pub fn symmetrize(t: &mut CmTensor) {
    let n = t.n();
    let pt = t.problem_type();
    if pt == ProblemType::Type1 {
        return;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            for ri in 0..4u8 {
                for rj in 0..4u8 {
                    let a = t.get(i, ri, j, rj);
                    if !a.is_finite() {
                        continue;
                    }
                    let (mi, mri, mj, mrj) = mirror_pose(pt, i, ri, j, rj);
                    let b = t.get(mi, mri, mj, mrj);
                    if !b.is_finite() {
                        continue;
                    }
                    let avg = 0.5 * (a + b);
                    t.set(i, ri, j, rj, avg);
                    t.set(mi, mri, mj, mrj, avg);
                }
            }
        }
    }
}

/// Divides every anchor row by its second-smallest finite value, expressing
/// each score as a multiple of the runner-up (best < 1 means an unambiguous
/// winner). A zero second-best gets a tiny epsilon and is counted.
pub fn gallagher_rescale(t: &mut CmTensor) -> PostStats {
    let mut stats = PostStats::default();
    let n = t.n();
    for i in 0..n {
        for &ri in anchor_rotations(t.problem_type()) {
            let row = t.row_mut(i, ri);
            let mut best = f32::INFINITY;
            let mut second = f32::INFINITY;
            for &v in row.iter() {
                if v.is_finite() {
                    if v < best {
                        second = best;
                        best = v;
                    } else if v < second {
                        second = v;
                    }
                }
            }
            if !second.is_finite() {
                continue; // fewer than two finite entries
            }
            let mut denom = second;
            if denom <= 0.0 {
                stats.zero_second_best += 1;
                denom += 1e-12;
            }
            for v in row.iter_mut() {
                if v.is_finite() {
                    *v /= denom;
                }
            }
        }
    }
    stats
}

//! Greedy puzzle reconstruction from a (rescaled) score tensor, plus the
//! neighbor-accuracy and perfect-reconstruction metrics.

use alloc::vec;
use alloc::vec::Vec;

use crate::cm::CmTensor;
use crate::puzzle::{Dir, ProblemType, PuzzleBundle};
use crate::{Error, Result};

/// A full assignment of pieces (with placement rotations) to grid cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement {
    pub rows: usize,
    pub cols: usize,
    /// Row-major cells of `(scrambled piece index, ccw quarter turns)`.
    pub cells: Vec<Option<(usize, u8)>>,
}

impl Placement {
    pub fn cell(&self, r: usize, c: usize) -> Option<(usize, u8)> {
        self.cells[r * self.cols + c]
    }

    /// Cell coordinates of each piece.
    fn locate(&self) -> Vec<Option<(usize, usize, u8)>> {
        let mut n = 0;
        for c in self.cells.iter().flatten() {
            n = n.max(c.0 + 1);
        }
        let mut out = vec![None; n];
        for r in 0..self.rows {
            for c in 0..self.cols {
                if let Some((p, q)) = self.cell(r, c) {
                    out[p] = Some((r, c, q));
                }
            }
        }
        out
    }
}

/// Directional score of placing `p` at rotation `q` next to an already
/// placed neighbor `(n, qn)`, where `dir` points from the candidate slot to
/// the neighbor.
#[inline]
fn directional_score(t: &CmTensor, dir: Dir, n: usize, qn: u8, p: usize, q: u8) -> f32 {
    match dir {
        Dir::Left => t.get(n, qn, p, q),      // neighbor sits left of candidate
        Dir::Right => t.get(p, q, n, qn),     // candidate sits left of neighbor
        Dir::Up => t.down_score(n, qn, p, q), // candidate below neighbor
        Dir::Down => t.down_score(p, q, n, qn),
    }
}

/// Deterministic greedy placement with a sliding bounding window.
///
/// Seeds with the lowest-scoring adjacency in the whole tensor, then
/// repeatedly commits the (slot, piece, rotation) with the lowest mean score
/// against all placed neighbors of the slot. Ties break toward more placed
/// neighbors, then lowest piece index, lowest rotation, and scan order of
/// the open slots. The bounding box of placed pieces is constrained to the
/// target dimensions (either orientation for Type-2), so every piece ends up
/// inside one rows x cols window.
pub fn greedy_solve(t: &CmTensor, rows: usize, cols: usize) -> Result<Placement> {
    let n = t.n();
    if rows * cols != n {
        return Err(Error::TensorMismatch {
            tensor_n: n,
            puzzle_n: rows * cols,
        });
    }
    let pt = t.problem_type();
    let rotations: &[u8] = match pt {
        ProblemType::Type1 => &[0],
        ProblemType::Type2 => &[0, 1, 2, 3],
    };

    if n == 1 {
        return Ok(Placement {
            rows,
            cols,
            cells: vec![Some((0, 0))],
        });
    }

    // Virtual board big enough for any drift of the window around the seed,
    // plus the one-cell ring the slot scan probes.
    let side = 2 * rows.max(cols) + 5;
    let origin = (rows.max(cols) + 2) as isize;
    let mut board: Vec<Option<(usize, u8)>> = vec![None; side * side];
    let at = |r: isize, c: isize| (r as usize) * side + c as usize;

    // Seed: the single most confident adjacency, scanned in index order.
    // Type-1 tensors carry vertical adjacencies in the co-rotated slots
    // (1, 1), still describing unrotated pieces.
    let mut best = (f32::INFINITY, 0usize, 0u8, 0usize, 0u8);
    for i in 0..n {
        for &ri in rotations {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for &rj in rotations {
                    let v = t.get(i, ri, j, rj);
                    if v < best.0 {
                        best = (v, i, ri, j, rj);
                    }
                }
            }
        }
    }
    let mut best_vertical = false;
    if pt == ProblemType::Type1 {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let v = t.get(i, 1, j, 1);
                if v < best.0 {
                    best = (v, i, 0, j, 0);
                    best_vertical = true;
                }
            }
        }
    }
    let (_, si, sri, sj, srj) = best;
    let mut placed = vec![false; n];
    let mut remaining = n;
    let offset = if best_vertical { (1isize, 0isize) } else { (0, 1) };
    let seeds = [
        ((origin, origin), (si, sri)),
        ((origin + offset.0, origin + offset.1), (sj, srj)),
    ];
    for ((r, c), (p, q)) in seeds {
        board[at(r, c)] = Some((p, q));
        placed[p] = true;
        remaining -= 1;
    }
    let (mut min_r, mut max_r) = (origin, origin + offset.0);
    let (mut min_c, mut max_c) = (origin, origin + offset.1);

    let fits = |h: usize, w: usize| -> bool {
        (h <= rows && w <= cols) || (pt == ProblemType::Type2 && h <= cols && w <= rows)
    };

    while remaining > 0 {
        // Open slots: empty cells adjacent to a placed piece that keep the
        // bounding box legal, in scan order.
        let mut slots: Vec<(isize, isize)> = Vec::new();
        for r in min_r - 1..=max_r + 1 {
            for c in min_c - 1..=max_c + 1 {
                if board[at(r, c)].is_some() {
                    continue;
                }
                let adjacent = Dir::ALL.iter().any(|d| {
                    let (dr, dc) = d.offset();
                    board[at(r + dr, c + dc)].is_some()
                });
                if !adjacent {
                    continue;
                }
                let h = (max_r.max(r) - min_r.min(r) + 1) as usize;
                let w = (max_c.max(c) - min_c.min(c) + 1) as usize;
                if fits(h, w) {
                    slots.push((r, c));
                }
            }
        }

        // (score, most neighbors, piece, rot, slot order): lowest wins.
        let mut chosen: Option<(f32, usize, usize, u8, usize)> = None;
        for (slot_idx, &(r, c)) in slots.iter().enumerate() {
            for p in 0..n {
                if placed[p] {
                    continue;
                }
                for &q in rotations {
                    let mut total = 0.0f32;
                    let mut count = 0usize;
                    for d in Dir::ALL {
                        let (dr, dc) = d.offset();
                        if let Some((nb, qn)) = board[at(r + dr, c + dc)] {
                            total += directional_score(t, d, nb, qn, p, q);
                            count += 1;
                        }
                    }
                    if count == 0 || !total.is_finite() {
                        continue;
                    }
                    let mean = total / count as f32;
                    let better = match chosen {
                        None => true,
                        Some((s, nc, bp, bq, bs)) => {
                            (mean, core::cmp::Reverse(count), p, q, slot_idx)
                                < (s, core::cmp::Reverse(nc), bp, bq, bs)
                        }
                    };
                    if better {
                        chosen = Some((mean, count, p, q, slot_idx));
                    }
                }
            }
        }

        let (_, _, p, q, slot_idx) =
            chosen.ok_or_else(|| Error::Numerical("greedy solver ran out of candidates".into()))?;
        let (r, c) = slots[slot_idx];
        board[at(r, c)] = Some((p, q));
        placed[p] = true;
        remaining -= 1;
        min_r = min_r.min(r);
        max_r = max_r.max(r);
        min_c = min_c.min(c);
        max_c = max_c.max(c);
    }

    // Extract the filled window; rotate it back if it grew in the swapped
    // orientation.
    let h = (max_r - min_r + 1) as usize;
    let w = (max_c - min_c + 1) as usize;
    let mut cells: Vec<Option<(usize, u8)>> = vec![None; h * w];
    for r in 0..h {
        for c in 0..w {
            cells[r * w + c] = board[at(min_r + r as isize, min_c + c as isize)];
        }
    }
    let placement = if h <= rows && w <= cols {
        Placement {
            rows,
            cols,
            cells: pad(cells, h, w, rows, cols),
        }
    } else {
        // Rotate the whole board clockwise: (r, c) of h x w -> (c, h-1-r).
        let mut rotated: Vec<Option<(usize, u8)>> = vec![None; w * h];
        for r in 0..h {
            for c in 0..w {
                if let Some((p, q)) = cells[r * w + c] {
                    rotated[c * h + (h - 1 - r)] = Some((p, (q + 3) % 4));
                }
            }
        }
        Placement {
            rows,
            cols,
            cells: pad(rotated, w, h, rows, cols),
        }
    };
    Ok(placement)
}

/// Embeds an `h x w` block into the top-left of a `rows x cols` grid (the
/// block can be smaller when the placement never saturated the window).
fn pad(
    cells: Vec<Option<(usize, u8)>>,
    h: usize,
    w: usize,
    rows: usize,
    cols: usize,
) -> Vec<Option<(usize, u8)>> {
    if h == rows && w == cols {
        return cells;
    }
    let mut out = vec![None; rows * cols];
    for r in 0..h {
        for c in 0..w {
            out[r * cols + c] = cells[r * w + c];
        }
    }
    out
}

/// Board orientation of the pair `(piece, placement rotation)`: placements
/// displaying every piece co-rotated by the same amount are globally rotated
/// ground truths.
fn pose_orientation(bundle: &PuzzleBundle, piece: usize, q: u8) -> u8 {
    (q + bundle.rotations[piece]) % 4
}

/// Fraction of ground-truth adjacent pairs reproduced in the placement with
/// the same relative direction and rotation. The denominator is the total
/// adjacency count `rows*(cols-1) + (rows-1)*cols`; whole-board translation
/// and (Type-2) global rotation do not lose pairs.
pub fn neighbor_accuracy(placement: &Placement, bundle: &PuzzleBundle) -> Result<f64> {
    bundle.validate()?;
    let locations = placement.locate();
    let denom = bundle.rows * (bundle.cols - 1) + (bundle.rows - 1) * bundle.cols;
    if denom == 0 {
        return Ok(1.0);
    }
    let mut hits = 0usize;
    for s in 0..bundle.len() {
        for dir in [Dir::Right, Dir::Down] {
            let Some(nb) = bundle.gt_neighbor(s, dir) else {
                continue;
            };
            let (Some(&Some((r1, c1, q1))), Some(&Some((r2, c2, q2)))) =
                (locations.get(s), locations.get(nb))
            else {
                continue;
            };
            let g1 = pose_orientation(bundle, s, q1);
            let g2 = pose_orientation(bundle, nb, q2);
            if g1 != g2 {
                continue;
            }
            // Rotating the content by g turns board direction `dir` into
            // `dir - g`.
            let want = Dir::from_index(dir.index() + 4 - g1);
            let (dr, dc) = want.offset();
            if (r2 as isize - r1 as isize, c2 as isize - c1 as isize) == (dr, dc) {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / denom as f64)
}

/// True when the placement reproduces the ground-truth board exactly:
/// every adjacency correct and the absolute grid equal to ground truth, up
/// to a global board rotation for Type-2 (any rotation for square boards,
/// 180 degrees otherwise).
pub fn perfect_reconstruction(placement: &Placement, bundle: &PuzzleBundle) -> Result<bool> {
    if neighbor_accuracy(placement, bundle)? < 1.0 {
        return Ok(false);
    }
    let candidates: &[u8] = match bundle.problem_type {
        ProblemType::Type1 => &[0],
        ProblemType::Type2 => &[0, 1, 2, 3],
    };
    'outer: for &g in candidates {
        if g % 2 == 1 && bundle.rows != bundle.cols {
            continue;
        }
        for s in 0..bundle.len() {
            let (r, c) = bundle.cell_of(s);
            // Rotating the board CCW by g maps cell (r, c) of R x C.
            let (rr, cc) = match g {
                0 => (r, c),
                1 => (bundle.cols - 1 - c, r),
                2 => (bundle.rows - 1 - r, bundle.cols - 1 - c),
                _ => (c, bundle.rows - 1 - r),
            };
            let want_q = (4 + g - bundle.rotations[s] % 4) % 4;
            if placement.cell(rr, cc) != Some((s, want_q)) {
                continue 'outer;
            }
        }
        return Ok(true);
    }
    Ok(false)
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
            .map(|v| ((v * 29 + 3) % 251) as f32 / 255.0)
            .collect();
        let img = Image::new(rows * 8, cols * 8, 3, data).unwrap();
        let grid = cut_puzzle(&img, 8, None).unwrap();
        scramble(&grid, pt, seed, "test")
    }

    fn gt_placement(b: &PuzzleBundle) -> Placement {
        let mut cells = vec![None; b.len()];
        for s in 0..b.len() {
            let (r, c) = b.cell_of(s);
            cells[r * b.cols + c] = Some((s, (4 - b.rotations[s] % 4) % 4));
        }
        Placement {
            rows: b.rows,
            cols: b.cols,
            cells,
        }
    }

    #[test]
    fn ground_truth_placement_scores_one() {
        let b = bundle(3, 4, ProblemType::Type2, 1);
        let p = gt_placement(&b);
        assert_eq!(neighbor_accuracy(&p, &b).unwrap(), 1.0);
        assert!(perfect_reconstruction(&p, &b).unwrap());
    }

    #[test]
    fn whole_board_180_rotation_keeps_accuracy_one() {
        let b = bundle(2, 3, ProblemType::Type2, 2);
        let p = gt_placement(&b);
        let mut rotated = vec![None; b.len()];
        for r in 0..2 {
            for c in 0..3 {
                if let Some((piece, q)) = p.cell(r, c) {
                    rotated[(1 - r) * 3 + (2 - c)] = Some((piece, (q + 2) % 4));
                }
            }
        }
        let p2 = Placement {
            rows: 2,
            cols: 3,
            cells: rotated,
        };
        assert_eq!(neighbor_accuracy(&p2, &b).unwrap(), 1.0);
        assert!(perfect_reconstruction(&p2, &b).unwrap());
        // Type-1 knows the orientation, so only the identity counts there.
        let b1 = bundle(2, 3, ProblemType::Type1, 2);
        let gt1 = gt_placement(&b1);
        assert!(perfect_reconstruction(&gt1, &b1).unwrap());
    }

    #[test]
    fn swapped_rows_score_half_on_2x2() {
        let b = bundle(2, 2, ProblemType::Type1, 3);
        let p = gt_placement(&b);
        let swapped = Placement {
            rows: 2,
            cols: 2,
            cells: vec![p.cells[2], p.cells[3], p.cells[0], p.cells[1]],
        };
        // The two horizontal adjacencies survive the row swap; the two
        // vertical ones flip direction and are lost.
        assert_eq!(neighbor_accuracy(&swapped, &b).unwrap(), 0.5);
        assert!(!perfect_reconstruction(&swapped, &b).unwrap());
    }

    #[test]
    fn oracle_solve_is_perfect_on_small_grids() {
        for pt in [ProblemType::Type1, ProblemType::Type2] {
            for (rows, cols) in [(1, 2), (2, 2), (3, 2), (3, 3), (2, 4)] {
                let b = bundle(rows, cols, pt, 7 + rows as u64 * 10 + cols as u64);
                let (mut t, _) = compute_cm(&b, &Backend::Oracle, &Sequential).unwrap();
                crate::cm::gallagher_rescale(&mut t);
                let p = greedy_solve(&t, rows, cols).unwrap();
                assert!(
                    perfect_reconstruction(&p, &b).unwrap(),
                    "{pt:?} {rows}x{cols}"
                );
            }
        }
    }

    #[test]
    fn one_by_two_picks_the_lower_score_orientation() {
        let mut t = CmTensor::new_sentinel(2, ProblemType::Type1);
        // piece 1 right of piece 0 scores best.
        t.set(0, 0, 1, 0, 0.1);
        t.set(1, 0, 0, 0, 0.9);
        t.set(0, 1, 1, 1, 0.8);
        t.set(1, 1, 0, 1, 0.7);
        let p = greedy_solve(&t, 1, 2).unwrap();
        assert_eq!(p.cells, vec![Some((0, 0)), Some((1, 0))]);
    }

    #[test]
    fn random_tensor_solve_is_deterministic_and_total() {
        let b = bundle(3, 3, ProblemType::Type2, 9);
        let (t, _) = compute_cm(
            &b,
            &Backend::Classical(crate::classical::ClassicalKind::Ssd),
            &Sequential,
        )
        .unwrap();
        let p1 = greedy_solve(&t, 3, 3).unwrap();
        let p2 = greedy_solve(&t, 3, 3).unwrap();
        assert_eq!(p1, p2);
        assert_eq!(p1.cells.iter().flatten().count(), 9);
    }
}

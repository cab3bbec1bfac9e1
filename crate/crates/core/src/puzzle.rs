//! Cutting images into piece grids, scrambling them into puzzles, and ground
//! truth bookkeeping.

use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::Image;
use crate::piece::Piece;
use crate::{Error, Result};

/// Puzzle variant: `Type1` has unknown locations and known orientation,
/// `Type2` has unknown locations and orientations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemType {
    Type1,
    Type2,
}

/// Adjacency direction in ground-truth board coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dir {
    Right = 0,
    Down = 1,
    Left = 2,
    Up = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::Right, Dir::Down, Dir::Left, Dir::Up];

    pub fn from_index(i: u8) -> Dir {
        Self::ALL[(i % 4) as usize]
    }

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn opposite(self) -> Dir {
        Dir::from_index(self.index() + 2)
    }

    /// Cell offset (row delta, col delta).
    pub fn offset(self) -> (isize, isize) {
        match self {
            Dir::Right => (0, 1),
            Dir::Down => (1, 0),
            Dir::Left => (0, -1),
            Dir::Up => (-1, 0),
        }
    }
}

/// Pieces of one image in ground-truth row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceGrid {
    pub rows: usize,
    pub cols: usize,
    pub piece_size: usize,
    pub channels: usize,
    pub erosion: usize,
    pub pieces: Vec<Piece>,
}

impl PieceGrid {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn piece(&self, row: usize, col: usize) -> &Piece {
        &self.pieces[row * self.cols + col]
    }

    /// Applies boundary erosion to every piece.
    pub fn eroded(&self, e: usize) -> Result<PieceGrid> {
        let pieces = self
            .pieces
            .iter()
            .map(|p| p.erode(e))
            .collect::<Result<Vec<_>>>()?;
        Ok(PieceGrid {
            erosion: self.erosion.max(e),
            pieces,
            ..*self
        })
    }

    /// Tiles the pieces back into an image (ground-truth layout).
    pub fn reassemble(&self) -> Image {
        let s = self.piece_size;
        let mut img = Image::zeros(self.rows * s, self.cols * s, self.channels);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let p = self.piece(r, c);
                for pr in 0..s {
                    for pc in 0..s {
                        for ch in 0..self.channels {
                            img.set(r * s + pr, c * s + pc, ch, p.get(pr, pc, ch));
                        }
                    }
                }
            }
        }
        img
    }
}

/// Cuts `img` into non-overlapping `piece_size` squares, top-left anchored;
/// remainder pixels are discarded. With `max_pieces`, the grid is
/// center-cropped (trimming the longer side first) until `rows * cols`
/// fits the bound.
pub fn cut_puzzle(img: &Image, piece_size: usize, max_pieces: Option<usize>) -> Result<PieceGrid> {
    if piece_size == 0 {
        return Err(Error::InvalidArgument("piece size must be >= 1".into()));
    }
    let rows = img.height() / piece_size;
    let cols = img.width() / piece_size;
    if rows == 0 || cols == 0 {
        return Err(Error::ImageTooSmall {
            height: img.height(),
            width: img.width(),
            piece_size,
        });
    }

    let (mut keep_rows, mut keep_cols) = (rows, cols);
    if let Some(max) = max_pieces {
        if max == 0 {
            return Err(Error::InvalidArgument("max_pieces must be >= 1".into()));
        }
        // Trim the strictly larger dimension first so the crop keeps the
        // image orientation.
        while keep_rows * keep_cols > max {
            if keep_rows > keep_cols && keep_rows > 1 {
                keep_rows -= 1;
            } else if keep_cols > 1 {
                keep_cols -= 1;
            } else if keep_rows > 1 {
                keep_rows -= 1;
            } else {
                break;
            }
        }
    }
    let row0 = (rows - keep_rows) / 2;
    let col0 = (cols - keep_cols) / 2;

    let mut pieces = Vec::with_capacity(keep_rows * keep_cols);
    for r in 0..keep_rows {
        for c in 0..keep_cols {
            pieces.push(Piece::from_image_block(
                img,
                (row0 + r) * piece_size,
                (col0 + c) * piece_size,
                piece_size,
            )?);
        }
    }
    Ok(PieceGrid {
        rows: keep_rows,
        cols: keep_cols,
        piece_size,
        channels: img.channels(),
        erosion: 0,
        pieces,
    })
}

/// A scrambled puzzle with its ground truth.
///
/// `pieces[s]` is the piece handed to a solver; `permutation[s]` is the
/// ground-truth row-major cell it came from and `rotations[s]` the number of
/// counterclockwise quarter turns applied at scramble time. Type-1 puzzles
/// always record rotation 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PuzzleBundle {
    pub rows: usize,
    pub cols: usize,
    pub piece_size: usize,
    pub erosion: usize,
    pub problem_type: ProblemType,
    pub pieces: Vec<Piece>,
    pub permutation: Vec<usize>,
    pub rotations: Vec<u8>,
    pub source_id: String,
}

impl PuzzleBundle {
    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Checks the structural invariants: a bijective permutation, rotation
    /// codes in range (all zero for Type-1), and N = rows * cols.
    pub fn validate(&self) -> Result<()> {
        let n = self.rows * self.cols;
        if self.pieces.len() != n || self.permutation.len() != n || self.rotations.len() != n {
            return Err(Error::DataMismatch(alloc::format!(
                "expected {n} pieces, got {} pieces / {} permutation entries / {} rotations",
                self.pieces.len(),
                self.permutation.len(),
                self.rotations.len()
            )));
        }
        let mut seen = alloc::vec![false; n];
        for &cell in &self.permutation {
            if cell >= n || seen[cell] {
                return Err(Error::DataMismatch("permutation is not a bijection".into()));
            }
            seen[cell] = true;
        }
        for &r in &self.rotations {
            if r > 3 {
                return Err(Error::DataMismatch("rotation code out of range".into()));
            }
            if self.problem_type == ProblemType::Type1 && r != 0 {
                return Err(Error::DataMismatch("Type-1 bundle with nonzero rotation".into()));
            }
        }
        Ok(())
    }

    /// Ground-truth (row, col) cell of scrambled piece `s`.
    pub fn cell_of(&self, s: usize) -> (usize, usize) {
        let cell = self.permutation[s];
        (cell / self.cols, cell % self.cols)
    }

    /// Scrambled index of the piece whose ground-truth cell is (row, col).
    pub fn piece_at_cell(&self, row: usize, col: usize) -> usize {
        let cell = row * self.cols + col;
        self.permutation.iter().position(|&c| c == cell).expect("bijection")
    }

    /// Scrambled index of the ground-truth neighbor of piece `s` in board
    /// direction `dir`, if that cell exists.
    pub fn gt_neighbor(&self, s: usize, dir: Dir) -> Option<usize> {
        let (r, c) = self.cell_of(s);
        let (dr, dc) = dir.offset();
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        if nr < 0 || nc < 0 || nr >= self.rows as isize || nc >= self.cols as isize {
            return None;
        }
        Some(self.piece_at_cell(nr as usize, nc as usize))
    }

    /// Reverses the scramble: rotates every piece back and places it at its
    /// ground-truth cell.
    pub fn unscramble(&self) -> PieceGrid {
        let mut pieces: Vec<Option<Piece>> = alloc::vec![None; self.len()];
        for s in 0..self.len() {
            let restored = self.pieces[s].rotated(4 - self.rotations[s] % 4);
            pieces[self.permutation[s]] = Some(restored);
        }
        PieceGrid {
            rows: self.rows,
            cols: self.cols,
            piece_size: self.piece_size,
            channels: self.pieces.first().map_or(3, Piece::channels),
            erosion: self.erosion,
            pieces: pieces.into_iter().map(|p| p.expect("bijection")).collect(),
        }
    }
}

/// Scrambles a piece grid into a puzzle with a seeded generator: a uniform
/// permutation, plus an independent uniform rotation per piece for Type-2.
/// The same (grid, type, seed) always yields the same bundle.
pub fn scramble(
    grid: &PieceGrid,
    problem_type: ProblemType,
    seed: u64,
    source_id: &str,
) -> PuzzleBundle {
    let n = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    // order[s] = ground-truth index of the piece stored at scrambled slot s.
    let mut pieces = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    for &gt in &order {
        let rot = match problem_type {
            ProblemType::Type1 => 0u8,
            ProblemType::Type2 => rng.gen_range(0..4u8),
        };
        pieces.push(grid.pieces[gt].rotated(rot));
        rotations.push(rot);
    }
    PuzzleBundle {
        rows: grid.rows,
        cols: grid.cols,
        piece_size: grid.piece_size,
        erosion: grid.erosion,
        problem_type,
        pieces,
        permutation: order,
        rotations,
        source_id: source_id.into(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ramp_image(h: usize, w: usize) -> Image {
        let data = (0..h * w * 3).map(|i| (i % 251) as f32 / 255.0).collect();
        Image::new(h, w, 3, data).unwrap()
    }

    #[test]
    fn cut_56x56_gives_2x2_top_left_anchored() {
        let img = ramp_image(56, 56);
        let grid = cut_puzzle(&img, 28, None).unwrap();
        assert_eq!((grid.rows, grid.cols), (2, 2));
        for r in 0..28 {
            for c in 0..28 {
                for ch in 0..3 {
                    assert_eq!(grid.piece(0, 0).get(r, c, ch), img.get(r, c, ch));
                }
            }
        }
    }

    #[test]
    fn cut_discards_remainder() {
        let grid = cut_puzzle(&ramp_image(60, 59), 28, None).unwrap();
        assert_eq!((grid.rows, grid.cols), (2, 2));
    }

    #[test]
    fn cut_rejects_too_small_images() {
        assert!(cut_puzzle(&ramp_image(20, 40), 28, None).is_err());
    }

    #[test]
    fn cut_max_pieces_center_crops() {
        let grid = cut_puzzle(&ramp_image(28 * 5, 28 * 4), 28, Some(6)).unwrap();
        assert!(grid.rows * grid.cols <= 6);
        assert_eq!((grid.rows, grid.cols), (3, 2));
    }

    #[test]
    fn cutting_tiles_the_cropped_image_exactly() {
        let img = ramp_image(56, 84);
        let grid = cut_puzzle(&img, 28, None).unwrap();
        assert_eq!(grid.reassemble(), img);
    }

    #[test]
    fn scramble_is_deterministic() {
        let grid = cut_puzzle(&ramp_image(56, 56), 28, None).unwrap();
        let a = scramble(&grid, ProblemType::Type2, 9, "img");
        let b = scramble(&grid, ProblemType::Type2, 9, "img");
        assert_eq!(a, b);
        let c = scramble(&grid, ProblemType::Type2, 10, "img");
        assert!(c.permutation != a.permutation || c.rotations != a.rotations);
    }

    #[test]
    fn type1_has_zero_rotations() {
        let grid = cut_puzzle(&ramp_image(56, 84), 28, None).unwrap();
        let b = scramble(&grid, ProblemType::Type1, 3, "img");
        assert!(b.rotations.iter().all(|&r| r == 0));
        b.validate().unwrap();
    }

    #[test]
    fn single_piece_scramble_is_identity() {
        let grid = cut_puzzle(&ramp_image(28, 28), 28, None).unwrap();
        let b = scramble(&grid, ProblemType::Type1, 123, "img");
        assert_eq!(b.permutation, vec![0]);
        assert_eq!(b.rotations, vec![0]);
    }

    #[test]
    fn unscramble_restores_ground_truth() {
        let grid = cut_puzzle(&ramp_image(84, 56), 28, None).unwrap();
        for seed in 0..4 {
            let b = scramble(&grid, ProblemType::Type2, seed, "img");
            b.validate().unwrap();
            assert_eq!(b.unscramble(), grid);
        }
    }

    #[test]
    fn gt_neighbor_follows_board_geometry() {
        let grid = cut_puzzle(&ramp_image(56, 56), 28, None).unwrap();
        let b = scramble(&grid, ProblemType::Type1, 7, "img");
        let top_left = b.piece_at_cell(0, 0);
        let top_right = b.piece_at_cell(0, 1);
        assert_eq!(b.gt_neighbor(top_left, Dir::Right), Some(top_right));
        assert_eq!(b.gt_neighbor(top_left, Dir::Up), None);
        assert_eq!(b.gt_neighbor(top_right, Dir::Left), Some(top_left));
    }
}

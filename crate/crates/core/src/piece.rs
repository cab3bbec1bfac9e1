//! Square puzzle pieces: rotation, mirroring, boundary erosion, and edge
//! column access.

use alloc::vec;
use alloc::vec::Vec;

use crate::image::Image;
use crate::{Error, Result};

/// One square `size x size x channels` puzzle tile, interleaved
/// (row, column, channel), values in `[0, 1]`. `erosion` records how many
/// outer frame pixels have been zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    size: usize,
    channels: usize,
    erosion: usize,
    data: Vec<f32>,
}

impl Piece {
    pub fn new(size: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if size == 0 || channels == 0 || data.len() != size * size * channels {
            return Err(Error::InvalidArgument(alloc::format!(
                "piece data length {} does not match {size}x{size}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            size,
            channels,
            erosion: 0,
            data,
        })
    }

    /// Copies the `size x size` block of `img` anchored at (`row0`, `col0`).
    pub fn from_image_block(img: &Image, row0: usize, col0: usize, size: usize) -> Result<Self> {
        if row0 + size > img.height() || col0 + size > img.width() {
            return Err(Error::ImageTooSmall {
                height: img.height(),
                width: img.width(),
                piece_size: size,
            });
        }
        let channels = img.channels();
        let mut data = Vec::with_capacity(size * size * channels);
        for r in 0..size {
            for c in 0..size {
                for ch in 0..channels {
                    data.push(img.get(row0 + r, col0 + c, ch));
                }
            }
        }
        Ok(Self {
            size,
            channels,
            erosion: 0,
            data,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn erosion(&self) -> usize {
        self.erosion
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.data[(row * self.size + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f32) {
        self.data[(row * self.size + col) * self.channels + ch] = v;
    }

    /// Rotates 90 degrees counterclockwise: `out[r][c] = in[c][S-1-r]`.
    pub fn rotate90(&self) -> Piece {
        let s = self.size;
        let mut out = vec![0.0f32; self.data.len()];
        for r in 0..s {
            for c in 0..s {
                for ch in 0..self.channels {
                    out[(r * s + c) * self.channels + ch] = self.get(c, s - 1 - r, ch);
                }
            }
        }
        Piece {
            size: s,
            channels: self.channels,
            erosion: self.erosion,
            data: out,
        }
    }

    /// Rotates by `quarter_turns` x 90 degrees counterclockwise.
    pub fn rotated(&self, quarter_turns: u8) -> Piece {
        let mut out = self.clone();
        for _ in 0..(quarter_turns % 4) {
            out = out.rotate90();
        }
        out
    }

    /// Mirrors horizontally (reverses column order). An involution: the right
    /// edge of the input becomes the left edge of the output.
    pub fn hflip(&self) -> Piece {
        let s = self.size;
        let mut out = vec![0.0f32; self.data.len()];
        for r in 0..s {
            for c in 0..s {
                for ch in 0..self.channels {
                    out[(r * s + c) * self.channels + ch] = self.get(r, s - 1 - c, ch);
                }
            }
        }
        Piece {
            size: s,
            channels: self.channels,
            erosion: self.erosion,
            data: out,
        }
    }

    /// Zeroes the outer `e`-pixel frame, keeping the inner
    /// `(S-2e) x (S-2e)` content. Idempotent for a fixed `e`.
    pub fn erode(&self, e: usize) -> Result<Piece> {
        if 2 * e >= self.size && e > 0 {
            return Err(Error::ErosionTooLarge {
                erosion: e,
                piece_size: self.size,
            });
        }
        let mut out = self.clone();
        out.erosion = self.erosion.max(e);
        for r in 0..self.size {
            for c in 0..self.size {
                if r < e || r >= self.size - e || c < e || c >= self.size - e {
                    for ch in 0..self.channels {
                        out.set(r, c, ch, 0.0);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Column `col` as `size * channels` interleaved values.
    pub fn column(&self, col: usize) -> Vec<f32> {
        let mut out = Vec::with_capacity(self.size * self.channels);
        for r in 0..self.size {
            for ch in 0..self.channels {
                out.push(self.get(r, col, ch));
            }
        }
        out
    }
}

/// The two-pixel-wide edge columns consumed by the classical measures.
#[derive(Debug, Clone)]
pub struct EdgeColumns {
    /// Rightmost column of the left piece.
    pub left_last: Vec<f32>,
    /// Second-to-last column of the left piece.
    pub left_second_last: Vec<f32>,
    /// Leftmost column of the right piece.
    pub right_first: Vec<f32>,
    /// Second column of the right piece.
    pub right_second: Vec<f32>,
}

impl EdgeColumns {
    pub fn extract(left: &Piece, right: &Piece) -> Result<Self> {
        if left.size() != right.size() || left.channels() != right.channels() {
            return Err(Error::SizeMismatch {
                left: left.size(),
                right: right.size(),
            });
        }
        if left.size() < 2 {
            return Err(Error::InvalidArgument(
                "edge columns need pieces of at least 2 pixels".into(),
            ));
        }
        let s = left.size();
        Ok(Self {
            left_last: left.column(s - 1),
            left_second_last: left.column(s - 2),
            right_first: right.column(0),
            right_second: right.column(1),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_piece(s: usize, c: usize) -> Piece {
        let data = (0..s * s * c).map(|i| i as f32 / (s * s * c) as f32).collect();
        Piece::new(s, c, data).unwrap()
    }

    #[test]
    fn rotate90_moves_last_column_to_top_row() {
        // 2x2, one channel: [[a, b], [c, d]] rotated CCW is [[b, d], [a, c]].
        let p = Piece::new(2, 1, vec![1.0, 0.25, 0.5, 0.75]).unwrap();
        let r = p.rotate90();
        assert_eq!(r.data(), &[0.25, 0.75, 1.0, 0.5]);
    }

    #[test]
    fn four_rotations_are_identity() {
        let p = ramp_piece(5, 3);
        assert_eq!(p.rotated(4), p);
        assert_eq!(p.rotated(0), p);
    }

    #[test]
    fn hflip_is_an_involution() {
        let p = ramp_piece(6, 3);
        assert_eq!(p.hflip().hflip(), p);
    }

    #[test]
    fn hflip_moves_right_edge_to_left_edge() {
        let p = ramp_piece(4, 2);
        assert_eq!(p.hflip().column(0), p.column(3));
    }

    #[test]
    fn erode_zeroes_frame_and_keeps_interior() {
        let p = ramp_piece(28, 3);
        let e = p.erode(1).unwrap();
        let mut zeroed = 0;
        for r in 0..28 {
            for c in 0..28 {
                let frame = r == 0 || r == 27 || c == 0 || c == 27;
                for ch in 0..3 {
                    if frame {
                        assert_eq!(e.get(r, c, ch), 0.0);
                    } else {
                        assert_eq!(e.get(r, c, ch), p.get(r, c, ch));
                    }
                }
                if frame {
                    zeroed += 1;
                }
            }
        }
        assert_eq!(zeroed, 108);
        assert_eq!(e.erosion(), 1);
    }

    #[test]
    fn erode_zero_is_identity() {
        let p = ramp_piece(4, 3);
        assert_eq!(p.erode(0).unwrap(), p);
    }

    #[test]
    fn erode_is_idempotent() {
        let p = ramp_piece(8, 3);
        let once = p.erode(2).unwrap();
        assert_eq!(once.erode(2).unwrap(), once);
    }

    #[test]
    fn erode_too_wide_fails() {
        let p = ramp_piece(4, 3);
        assert!(p.erode(2).is_err());
    }

    #[test]
    fn erode_keeps_inner_size_examples() {
        // 64x64 with e=2 keeps the inner 60x60.
        let p = ramp_piece(64, 3);
        let e = p.erode(2).unwrap();
        let kept = (0..64)
            .flat_map(|r| (0..64).map(move |c| (r, c)))
            .filter(|&(r, c)| e.get(r, c, 0) == p.get(r, c, 0) || p.get(r, c, 0) == 0.0)
            .count();
        assert!(kept >= 60 * 60);
    }
}

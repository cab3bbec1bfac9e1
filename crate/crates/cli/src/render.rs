//! PNG renderings: distance-map heatmaps and assembled boards.

use std::path::Path;

use image::GrayImage;
use puzzle_cm_core::cm::{distance_map_gt_order, CmTensor};
use puzzle_cm_core::image::Image;
use puzzle_cm_core::puzzle::PuzzleBundle;
use puzzle_cm_core::solver::Placement;

use crate::imgio::save_image;
use crate::CliResult;

/// Writes the ground-truth-ordered right-adjacency map as a grayscale PNG:
/// brighter = more compatible, so a good measure lights up the
/// superdiagonal. Sentinels (diagonal) render black.
pub fn save_distance_heatmap(
    tensor: &CmTensor,
    bundle: &PuzzleBundle,
    path: impl AsRef<Path>,
) -> CliResult<()> {
    let n = bundle.len();
    let map = distance_map_gt_order(tensor, bundle)?;
    let finite: Vec<f32> = map.iter().copied().filter(|v| v.is_finite()).collect();
    let min = finite.iter().copied().fold(f32::INFINITY, f32::min);
    let max = finite.iter().copied().fold(f32::NEG_INFINITY, f32::max);
    let span = (max - min).max(1e-12);
    let mut img = GrayImage::new(n as u32, n as u32);
    for gi in 0..n {
        for gj in 0..n {
            let v = map[gi * n + gj];
            let lum = if v.is_finite() {
                (((max - v) / span) * 255.0).round() as u8
            } else {
                0
            };
            img.put_pixel(gj as u32, gi as u32, image::Luma([lum]));
        }
    }
    img.save(path.as_ref())?;
    Ok(())
}

/// Assembles the placed board into an image: each cell shows its piece at
/// its placement rotation; empty cells stay black.
pub fn render_board(bundle: &PuzzleBundle, placement: &Placement) -> Image {
    let s = bundle.piece_size;
    let mut img = Image::zeros(placement.rows * s, placement.cols * s, 3);
    for r in 0..placement.rows {
        for c in 0..placement.cols {
            if let Some((piece, q)) = placement.cell(r, c) {
                let shown = bundle.pieces[piece].rotated(q);
                for pr in 0..s {
                    for pc in 0..s {
                        for ch in 0..3 {
                            img.set(r * s + pr, c * s + pc, ch, shown.get(pr, pc, ch));
                        }
                    }
                }
            }
        }
    }
    img
}

pub fn save_board(
    bundle: &PuzzleBundle,
    placement: &Placement,
    path: impl AsRef<Path>,
) -> CliResult<()> {
    save_image(&render_board(bundle, placement), path)
}

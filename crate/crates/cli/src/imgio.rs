//! Reading photos into the core image type and writing pieces, boards, and
//! heatmaps back out as 8-bit PNGs.

use std::path::Path;

use image::{DynamicImage, ImageReader, RgbImage};
use puzzle_cm_core::image::Image;
use puzzle_cm_core::piece::Piece;

use crate::{CliError, CliResult};

/// Loads a PNG or JPEG as RGB with channel values mapped to `v / 255`.
/// Grayscale and alpha images are converted to RGB first.
pub fn load_image(path: impl AsRef<Path>) -> CliResult<Image> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|e| CliError::io(path, e))?;
    let decoded: DynamicImage = reader.decode()?;
    let rgb = decoded.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(Image::from_u8(h as usize, w as usize, 3, rgb.as_raw())?)
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn image_to_rgb(img: &Image) -> RgbImage {
    let bytes: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
    RgbImage::from_raw(img.width() as u32, img.height() as u32, bytes).expect("sized buffer")
}

pub fn save_image(img: &Image, path: impl AsRef<Path>) -> CliResult<()> {
    image_to_rgb(img).save(path.as_ref())?;
    Ok(())
}

/// Writes one piece as an 8-bit RGB PNG (values quantized to `round(v*255)`).
pub fn save_piece(piece: &Piece, path: impl AsRef<Path>) -> CliResult<()> {
    let s = piece.size() as u32;
    let bytes: Vec<u8> = piece.data().iter().map(|&v| to_u8(v)).collect();
    let rgb = RgbImage::from_raw(s, s, bytes).expect("sized buffer");
    rgb.save(path.as_ref())?;
    Ok(())
}

/// Reads a piece PNG back; the inverse of [`save_piece`] for 8-bit data.
pub fn load_piece(path: impl AsRef<Path>, expect_size: usize) -> CliResult<Piece> {
    let img = load_image(path.as_ref())?;
    if img.height() != expect_size || img.width() != expect_size {
        return Err(CliError::Data(format!(
            "piece {} is {}x{}, expected {expect_size}x{expect_size}",
            path.as_ref().display(),
            img.height(),
            img.width()
        )));
    }
    Ok(Piece::new(expect_size, 3, img.data().to_vec())?)
}

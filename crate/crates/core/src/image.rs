//! In-memory RGB images with values in `[0, 1]` and bicubic downscaling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Interleaved (row, column, channel) image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::InvalidImage(format!(
                "empty dimensions {height}x{width}x{channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        if data.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidImage("values outside [0, 1]".into()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Builds an image from 8-bit samples, mapping `v` to `v / 255`.
    pub fn from_u8(height: usize, width: usize, channels: usize, bytes: &[u8]) -> Result<Self> {
        let data = bytes.iter().map(|&b| f32::from(b) / 255.0).collect();
        Self::new(height, width, channels, data)
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
            data: vec![0.0; height * width * channels],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f32 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f32) {
        self.data[(row * self.width + col) * self.channels + ch] = v;
    }

    #[inline]
    fn get_clamped(&self, row: isize, col: isize, ch: usize) -> f32 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.get(r, c, ch)
    }

    /// Downscales by an integer factor with separable bicubic resampling
    /// (Catmull-Rom kernel, `a = -0.5`). Output dimensions are
    /// `floor(dim / factor)`; border samples are clamp-replicated and the
    /// result is clipped back into `[0, 1]`.
    pub fn downscale_bicubic(&self, factor: usize) -> Result<Image> {
        if factor == 0 {
            return Err(Error::InvalidArgument("downscale factor must be >= 1".into()));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let out_h = self.height / factor;
        let out_w = self.width / factor;
        if out_h == 0 || out_w == 0 {
            return Err(Error::InvalidImage(format!(
                "{}x{} too small for downscale factor {factor}",
                self.height, self.width
            )));
        }

        // Horizontal pass, then vertical. The sampling grid maps output
        // centers onto input centers: src = (dst + 0.5) * factor - 0.5.
        let mut mid = vec![0.0f32; self.height * out_w * self.channels];
        for row in 0..self.height {
            for col in 0..out_w {
                let src = (col as f64 + 0.5) * factor as f64 - 0.5;
                let base = src.floor() as isize;
                let frac = src - base as f64;
                let w = cubic_weights(frac);
                for ch in 0..self.channels {
                    let mut acc = 0.0f64;
                    for (k, wk) in w.iter().enumerate() {
                        let c = base - 1 + k as isize;
                        acc += wk * f64::from(self.get_clamped(row as isize, c, ch));
                    }
                    mid[(row * out_w + col) * self.channels + ch] = acc as f32;
                }
            }
        }

        let mut out = vec![0.0f32; out_h * out_w * self.channels];
        for row in 0..out_h {
            let src = (row as f64 + 0.5) * factor as f64 - 0.5;
            let base = src.floor() as isize;
            let frac = src - base as f64;
            let w = cubic_weights(frac);
            for col in 0..out_w {
                for ch in 0..self.channels {
                    let mut acc = 0.0f64;
                    for (k, wk) in w.iter().enumerate() {
                        let r = (base - 1 + k as isize).clamp(0, self.height as isize - 1) as usize;
                        acc += wk * f64::from(mid[(r * out_w + col) * self.channels + ch]);
                    }
                    out[(row * out_w + col) * self.channels + ch] = acc.clamp(0.0, 1.0) as f32;
                }
            }
        }

        Ok(Image {
            height: out_h,
            width: out_w,
            channels: self.channels,
            data: out,
        })
    }
}

/// Catmull-Rom kernel value (bicubic convolution with `a = -0.5`).
pub fn catmull_rom(x: f64) -> f64 {
    const A: f64 = -0.5;
    let x = x.abs();
    if x <= 1.0 {
        (A + 2.0) * x * x * x - (A + 3.0) * x * x + 1.0
    } else if x < 2.0 {
        A * x * x * x - 5.0 * A * x * x + 8.0 * A * x - 4.0 * A
    } else {
        0.0
    }
}

/// Weights of the four taps around a sample point with fractional offset
/// `frac` from the base tap.
fn cubic_weights(frac: f64) -> [f64; 4] {
    [
        catmull_rom(frac + 1.0),
        catmull_rom(frac),
        catmull_rom(frac - 1.0),
        catmull_rom(frac - 2.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_image(h: usize, w: usize, v: f32) -> Image {
        Image::new(h, w, 3, vec![v; h * w * 3]).unwrap()
    }

    #[test]
    fn rejects_out_of_range_values() {
        assert!(Image::new(1, 1, 1, vec![1.5]).is_err());
        assert!(Image::new(1, 1, 1, vec![-0.1]).is_err());
    }

    #[test]
    fn from_u8_maps_through_255() {
        let img = Image::from_u8(1, 1, 3, &[0, 128, 255]).unwrap();
        assert_eq!(img.get(0, 0, 0), 0.0);
        assert!((img.get(0, 0, 1) - 128.0 / 255.0).abs() < 1e-7);
        assert_eq!(img.get(0, 0, 2), 1.0);
    }

    #[test]
    fn downscale_factor_one_is_identity() {
        let img = Image::from_u8(3, 5, 3, &(0..45).map(|v| v as u8).collect::<Vec<_>>()).unwrap();
        assert_eq!(img.downscale_bicubic(1).unwrap(), img);
    }

    #[test]
    fn downscale_zero_factor_rejected() {
        assert!(constant_image(4, 4, 0.5).downscale_bicubic(0).is_err());
    }

    #[test]
    fn downscale_preserves_constant_images() {
        let img = constant_image(8, 12, 0.375);
        let out = img.downscale_bicubic(2).unwrap();
        assert_eq!(out.height(), 4);
        assert_eq!(out.width(), 6);
        for &v in out.data() {
            assert!((v - 0.375).abs() < 1e-6, "got {v}");
        }
    }

    #[test]
    fn downscale_floors_output_dims() {
        let img = constant_image(7, 9, 0.25);
        let out = img.downscale_bicubic(2).unwrap();
        assert_eq!((out.height(), out.width()), (3, 4));
    }

    #[test]
    fn kernel_weights_sum_to_one() {
        for i in 0..=20 {
            let frac = f64::from(i) / 20.0;
            let s: f64 = cubic_weights(frac).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "frac {frac}: sum {s}");
        }
    }
}

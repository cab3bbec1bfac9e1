//! Deterministic procedural photographs: multi-octave value noise with a
//! per-image color mix, quantized to 8 bits. Neighboring pixels are strongly
//! correlated, which is what makes the cut pieces reassemblable; distinct
//! seeds give visually distinct images.

use puzzle_cm_core::image::Image;

/// Small deterministic generator (splitmix-style) local to the synthesizer.
struct Mix(u64);

impl Mix {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// One bilinearly interpolated random lattice octave added onto `acc`.
fn add_octave(acc: &mut [f64], h: usize, w: usize, cell: usize, amp: f64, rng: &mut Mix) {
    let lh = h / cell + 2;
    let lw = w / cell + 2;
    let lattice: Vec<f64> = (0..lh * lw * 3).map(|_| rng.unit() * 2.0 - 1.0).collect();
    for y in 0..h {
        let fy = y as f64 / cell as f64;
        let iy = fy.floor() as usize;
        let ty = fy - iy as f64;
        for x in 0..w {
            let fx = x as f64 / cell as f64;
            let ix = fx.floor() as usize;
            let tx = fx - ix as f64;
            for c in 0..3 {
                let at = |yy: usize, xx: usize| lattice[(yy * lw + xx) * 3 + c];
                let top = at(iy, ix) * (1.0 - tx) + at(iy, ix + 1) * tx;
                let bottom = at(iy + 1, ix) * (1.0 - tx) + at(iy + 1, ix + 1) * tx;
                acc[(y * w + x) * 3 + c] += amp * (top * (1.0 - ty) + bottom * ty);
            }
        }
    }
}

/// Generates one synthetic image. Same (height, width, seed) always yields
/// the same image.
pub fn synth_image(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = Mix(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ 0xDEAD_BEEF_CAFE_F00D);
    let mut acc = vec![0.0f64; height * width * 3];
    let base = height.min(width).max(16);
    for (divisor, amp) in [(6usize, 1.0f64), (16, 0.5), (48, 0.22)] {
        let cell = (base / divisor).max(2);
        add_octave(&mut acc, height, width, cell, amp, &mut rng);
    }

    // Per-image channel mixing so different seeds occupy different palettes.
    let mix: Vec<f64> = (0..9).map(|_| rng.unit() * 1.2 - 0.35).collect();
    let mut mixed = vec![0.0f64; acc.len()];
    for p in 0..height * width {
        for c in 0..3 {
            let mut v = 0.0;
            for k in 0..3 {
                v += mix[c * 3 + k] * acc[p * 3 + k];
            }
            mixed[p * 3 + c] = v;
        }
    }

    // Normalize each channel into a comfortably interior range and quantize
    // to the 8-bit grid so bundles round-trip exactly.
    let mut bytes = vec![0u8; mixed.len()];
    for c in 0..3 {
        let vals: Vec<f64> = (0..height * width).map(|p| mixed[p * 3 + c]).collect();
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = (max - min).max(1e-9);
        for (p, &v) in vals.iter().enumerate() {
            let unit = (v - min) / span * 0.9 + 0.05;
            bytes[p * 3 + c] = (unit * 255.0).round() as u8;
        }
    }
    Image::from_u8(height, width, 3, &bytes).expect("sized buffer")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = synth_image(64, 48, 7);
        let b = synth_image(64, 48, 7);
        assert_eq!(a, b);
        let c = synth_image(64, 48, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn neighboring_pixels_are_correlated() {
        let img = synth_image(96, 96, 3);
        // Mean absolute horizontal gradient should be far below the value
        // spread for a natural-looking image.
        let mut grad = 0.0f64;
        let mut count = 0usize;
        for y in 0..96 {
            for x in 0..95 {
                grad += (f64::from(img.get(y, x + 1, 0)) - f64::from(img.get(y, x, 0))).abs();
                count += 1;
            }
        }
        let mean_grad = grad / count as f64;
        assert!(mean_grad < 0.05, "mean gradient {mean_grad}");
        // And the image is not constant.
        let spread = img
            .data()
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        assert!(spread.1 - spread.0 > 0.5);
    }
}

//! Checks the separable bicubic downscaler against a direct 2-D evaluation
//! of the convolution sum on the same Catmull-Rom kernel and sampling grid.

use puzzle_cm_core::image::{catmull_rom, Image};

/// Direct (non-separable) bicubic resample at integer `factor`.
fn bicubic_direct(img: &Image, factor: usize) -> Vec<f64> {
    let (h, w, ch) = (img.height(), img.width(), img.channels());
    let (oh, ow) = (h / factor, w / factor);
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut out = vec![0.0f64; oh * ow * ch];
    for row in 0..oh {
        let sy = (row as f64 + 0.5) * factor as f64 - 0.5;
        let by = sy.floor() as isize;
        for col in 0..ow {
            let sx = (col as f64 + 0.5) * factor as f64 - 0.5;
            let bx = sx.floor() as isize;
            for c in 0..ch {
                let mut acc = 0.0;
                for ky in 0..4isize {
                    let yy = by - 1 + ky;
                    let wy = catmull_rom(sy - yy as f64);
                    for kx in 0..4isize {
                        let xx = bx - 1 + kx;
                        let wx = catmull_rom(sx - xx as f64);
                        acc += wy * wx * f64::from(img.get(clamp(yy, h), clamp(xx, w), c));
                    }
                }
                out[(row * ow + col) * ch + c] = acc.clamp(0.0, 1.0);
            }
        }
    }
    out
}

#[test]
fn ramp_downscale_matches_direct_convolution_sum() {
    // 4x4 linear ramp, factor 2.
    let data: Vec<f32> = (0..4 * 4 * 3)
        .map(|v| (v / 3) as f32 / 15.0)
        .collect();
    let img = Image::new(4, 4, 3, data).unwrap();
    let out = img.downscale_bicubic(2).unwrap();
    let oracle = bicubic_direct(&img, 2);
    assert_eq!(out.data().len(), oracle.len());
    for (a, &b) in out.data().iter().zip(&oracle) {
        assert!((f64::from(*a) - b).abs() < 1e-6, "{a} vs {b}");
    }
}

#[test]
fn textured_downscales_match_for_factors_2_and_3() {
    let data: Vec<f32> = (0..12 * 18 * 3)
        .map(|v| ((v * 37 + 11) % 256) as f32 / 255.0)
        .collect();
    let img = Image::new(12, 18, 3, data).unwrap();
    for factor in [2usize, 3] {
        let out = img.downscale_bicubic(factor).unwrap();
        let oracle = bicubic_direct(&img, factor);
        for (a, &b) in out.data().iter().zip(&oracle) {
            assert!((f64::from(*a) - b).abs() < 1e-6, "factor {factor}: {a} vs {b}");
        }
    }
}

//! The four classical pairwise dissimilarity measures: SSD, L1, PBC, and MGC.
//!
//! Every function scores the left-right adjacency pose `(left, right)` and
//! returns a dissimilarity (lower = more compatible). Other poses are
//! obtained by rotating the pieces before the call. Accumulation is done in
//! `f64` so identical inputs always give bit-identical scores.

use alloc::vec;
use alloc::vec::Vec;

use crate::piece::{EdgeColumns, Piece};
use crate::{Error, Result};

/// Magnitude of the MGC stabilizer gradients.
pub const MGC_STABILIZER_DELTA: f64 = 1.0 / 255.0;

/// Sum of squared differences between the adjoining edge columns.
pub fn ssd(left: &Piece, right: &Piece) -> Result<f32> {
    let e = EdgeColumns::extract(left, right)?;
    let sum: f64 = e
        .left_last
        .iter()
        .zip(&e.right_first)
        .map(|(&a, &b)| {
            let d = f64::from(a) - f64::from(b);
            d * d
        })
        .sum();
    Ok(sum as f32)
}

/// Asymmetric L1 measure between the adjoining edge columns. Symmetry, when
/// wanted, comes from downstream post-processing.
pub fn l1_cm(left: &Piece, right: &Piece) -> Result<f32> {
    let e = EdgeColumns::extract(left, right)?;
    let sum: f64 = e
        .left_last
        .iter()
        .zip(&e.right_first)
        .map(|(&a, &b)| (f64::from(a) - f64::from(b)).abs())
        .sum();
    Ok(sum as f32)
}

const PBC_P: f64 = 0.3;
const PBC_Q: f64 = 1.0 / 16.0;

fn pbc_directional(predict_from: (&[f32], &[f32]), actual: &[f32]) -> f64 {
    // Linear extrapolation across the boundary: pred = 2 * nearest - second.
    let (nearest, second) = predict_from;
    let sum: f64 = nearest
        .iter()
        .zip(second)
        .zip(actual)
        .map(|((&n, &s), &a)| {
            let pred = 2.0 * f64::from(n) - f64::from(s);
            (pred - f64::from(a)).abs().powf(PBC_P)
        })
        .sum();
    sum.powf(PBC_Q / PBC_P)
}

/// Prediction-based compatibility with the `(L_{3/10})^{1/16}` normalization,
/// i.e. `(sum |pred - actual|^p)^(q/p)` with `p = 3/10`, `q = 1/16`, summed
/// over both prediction directions.
pub fn pbc(left: &Piece, right: &Piece) -> Result<f32> {
    let e = EdgeColumns::extract(left, right)?;
    let d_lr = pbc_directional((&e.left_last, &e.left_second_last), &e.right_first);
    let d_rl = pbc_directional((&e.right_first, &e.right_second), &e.left_last);
    Ok((d_lr + d_rl) as f32)
}

/// Stabilizer gradients guaranteeing an invertible covariance: the zero
/// gradient, plus/minus delta on each channel alone, and plus/minus delta on
/// all channels at once (9 gradients for C = 3).
fn stabilizer_gradients(channels: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * channels + 3);
    out.push(vec![0.0; channels]);
    for ch in 0..channels {
        for sign in [1.0, -1.0] {
            let mut g = vec![0.0; channels];
            g[ch] = sign * MGC_STABILIZER_DELTA;
            out.push(g);
        }
    }
    for sign in [1.0, -1.0] {
        out.push(vec![sign * MGC_STABILIZER_DELTA; channels]);
    }
    out
}

/// Inverts a small symmetric positive-definite matrix by Gauss-Jordan
/// elimination with partial pivoting.
fn invert(mat: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = mat.len();
    let mut a: Vec<Vec<f64>> = mat.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).expect("finite"))
            .expect("non-empty");
        if a[pivot_row][col].abs() < 1e-300 {
            return Err(Error::Numerical("singular covariance in MGC".into()));
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..n {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for i in 0..n {
            if i != col {
                let factor = a[i][col];
                for j in 0..n {
                    a[i][j] -= factor * a[col][j];
                    inv[i][j] -= factor * inv[col][j];
                }
            }
        }
    }
    Ok(inv)
}

/// One directional MGC term: fits mean/covariance to the within-`source`
/// gradients at its boundary column and sums the Mahalanobis distances of the
/// cross-boundary gradients. The mean is taken over the row gradients alone;
/// the stabilizers only spread the covariance so it stays invertible.
fn mgc_directional(
    source_near: &[f32],
    source_second: &[f32],
    target_first: &[f32],
    rows: usize,
    channels: usize,
) -> Result<f64> {
    let grad = |a: &[f32], b: &[f32], r: usize, ch: usize| {
        f64::from(a[r * channels + ch]) - f64::from(b[r * channels + ch])
    };

    let mut samples: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..channels)
                .map(|ch| grad(source_near, source_second, r, ch))
                .collect()
        })
        .collect();

    let mut mean = vec![0.0f64; channels];
    for s in &samples {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }

    samples.extend(stabilizer_gradients(channels));
    let n = samples.len();

    // Sample covariance (n - 1 denominator) around the row-gradient mean.
    let mut cov = vec![vec![0.0f64; channels]; channels];
    for s in &samples {
        for i in 0..channels {
            for j in 0..channels {
                cov[i][j] += (s[i] - mean[i]) * (s[j] - mean[j]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    let inv = invert(&cov)?;

    let mut term = 0.0f64;
    for r in 0..rows {
        let h: Vec<f64> = (0..channels)
            .map(|ch| grad(target_first, source_near, r, ch) - mean[ch])
            .collect();
        for i in 0..channels {
            for j in 0..channels {
                term += h[i] * inv[i][j] * h[j];
            }
        }
    }
    Ok(term)
}

/// Mahalanobis gradient compatibility: compares cross-boundary color
/// gradients against the distribution of within-piece gradients, in both
/// directions.
pub fn mgc(left: &Piece, right: &Piece) -> Result<f32> {
    let e = EdgeColumns::extract(left, right)?;
    let rows = left.size();
    let ch = left.channels();
    let lr = mgc_directional(&e.left_last, &e.left_second_last, &e.right_first, rows, ch)?;
    let rl = mgc_directional(&e.right_first, &e.right_second, &e.left_last, rows, ch)?;
    Ok((lr + rl).max(0.0) as f32)
}

/// The classical measures selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassicalKind {
    Ssd,
    L1,
    Pbc,
    Mgc,
}

impl ClassicalKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassicalKind::Ssd => "ssd",
            ClassicalKind::L1 => "l1",
            ClassicalKind::Pbc => "pbc",
            ClassicalKind::Mgc => "mgc",
        }
    }

    pub fn score(self, left: &Piece, right: &Piece) -> Result<f32> {
        match self {
            ClassicalKind::Ssd => ssd(left, right),
            ClassicalKind::L1 => l1_cm(left, right),
            ClassicalKind::Pbc => pbc(left, right),
            ClassicalKind::Mgc => mgc(left, right),
        }
    }
}

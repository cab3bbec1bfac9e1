//! The benchmark harness: wall-clock scoring of full synthetic puzzles per
//! backend and size, the analytic MAC columns, and log-log slope fits.

use std::time::Instant;

use puzzle_cm_core::classical::ClassicalKind;
use puzzle_cm_core::cm::{compute_cm, Backend, CmStats};
use puzzle_cm_core::net::{ModelConfig, ModelParams, PairNetConfig, PairNetParams};
use puzzle_cm_core::puzzle::{cut_puzzle, scramble, ProblemType, PuzzleBundle};
use puzzle_cm_core::ParallelMap;
use serde::{Deserialize, Serialize};

use crate::synth::synth_image;
use crate::{CliError, CliResult};

/// One JSONL record of the benchmark report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchRecord {
    pub backend: String,
    pub n: usize,
    /// Median wall seconds over the repeats.
    pub wall_secs: f64,
    /// Analytic whole-puzzle cost of the published full-size architecture,
    /// in GMACs (absent for the classical measures).
    pub analytic_gmacs: Option<f64>,
    /// Parameter count of the published full-size architecture.
    pub params: Option<usize>,
    /// Instrumented forward passes of the run itself.
    pub embed_passes: u64,
    pub pair_passes: u64,
}

/// Backends the harness knows how to drive with synthetic weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchBackend {
    Classical(ClassicalKind),
    Edge2Vec,
    E2eProxy,
}

impl BenchBackend {
    pub fn parse(name: &str) -> CliResult<Self> {
        Ok(match name {
            "ssd" => BenchBackend::Classical(ClassicalKind::Ssd),
            "l1" => BenchBackend::Classical(ClassicalKind::L1),
            "pbc" => BenchBackend::Classical(ClassicalKind::Pbc),
            "mgc" => BenchBackend::Classical(ClassicalKind::Mgc),
            "edge2vec" => BenchBackend::Edge2Vec,
            "e2e_proxy" => BenchBackend::E2eProxy,
            other => {
                return Err(CliError::Usage(format!("unknown bench backend {other:?}")));
            }
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            BenchBackend::Classical(k) => k.name(),
            BenchBackend::Edge2Vec => "edge2vec",
            BenchBackend::E2eProxy => "e2e_proxy",
        }
    }
}

/// Synthetic-weight architectures sized so the scaling laws are measurable
/// on one CPU: the forward-pass counts are exact regardless of the weights,
/// and the analytic columns always describe the full published architecture.
pub fn synthetic_embedding_config(piece_size: usize) -> ModelConfig {
    ModelConfig {
        piece_size,
        channels_in: 3,
        conv_channels: [16, 32, 64, 128],
        embedding_dim: 320,
        groups: 16,
        twin: false,
    }
}

pub fn synthetic_pair_config(piece_size: usize) -> PairNetConfig {
    PairNetConfig {
        piece_size,
        channels_in: 3,
        conv_channels: [1, 2, 2, 2],
    }
}

/// Builds an N-piece Type-2 synthetic puzzle (grid as square as N allows).
pub fn synthetic_puzzle(n: usize, piece_size: usize, seed: u64) -> CliResult<PuzzleBundle> {
    if n == 0 {
        return Err(CliError::Usage("puzzle size 0".into()));
    }
    let mut rows = (n as f64).sqrt().floor() as usize;
    while rows > 1 && n % rows != 0 {
        rows -= 1;
    }
    let cols = n / rows;
    let img = synth_image(rows * piece_size, cols * piece_size, seed);
    let grid = cut_puzzle(&img, piece_size, None)?;
    Ok(scramble(&grid, ProblemType::Type2, seed, "bench"))
}

fn analytic_columns(backend: BenchBackend, n: usize) -> (Option<f64>, Option<usize>) {
    let full = ModelConfig {
        groups: 16,
        ..ModelConfig::default()
    };
    match backend {
        BenchBackend::Classical(_) => (None, None),
        BenchBackend::Edge2Vec => (
            Some(full.macs_per_puzzle_embedding(n) as f64 / 1e9),
            Some(full.param_count()),
        ),
        BenchBackend::E2eProxy => (
            Some(full.pair_proxy().macs_per_puzzle(n) as f64 / 1e9),
            Some(full.pair_proxy().param_count()),
        ),
    }
}

/// Scores one synthetic puzzle per (backend, size) with `repeat` timed runs
/// and returns the per-combination records (median wall time).
pub fn run_bench(
    backends: &[BenchBackend],
    sizes: &[usize],
    repeat: usize,
    piece_size: usize,
    mapper: &impl ParallelMap,
    mut progress: impl FnMut(&BenchRecord),
) -> CliResult<Vec<BenchRecord>> {
    if sizes.is_empty() || backends.is_empty() {
        return Err(CliError::Usage("need at least one size and backend".into()));
    }
    let embed_params: ModelParams<f32> =
        ModelParams::init(synthetic_embedding_config(piece_size), 1)?;
    let pair_params: PairNetParams<f32> =
        PairNetParams::init(synthetic_pair_config(piece_size), 1)?;

    let mut records = Vec::new();
    for &backend in backends {
        for &n in sizes {
            let bundle = synthetic_puzzle(n, piece_size, 1000 + n as u64)?;
            let mut walls = Vec::with_capacity(repeat.max(1));
            let mut stats = CmStats::default();
            for _ in 0..repeat.max(1) {
                let b = match backend {
                    BenchBackend::Classical(kind) => Backend::Classical(kind),
                    BenchBackend::Edge2Vec => Backend::Embedding(&embed_params),
                    BenchBackend::E2eProxy => Backend::E2eProxy(&pair_params),
                };
                let start = Instant::now();
                let (_, s) = compute_cm(&bundle, &b, mapper)?;
                walls.push(start.elapsed().as_secs_f64());
                stats = s;
            }
            walls.sort_by(f64::total_cmp);
            let median = walls[walls.len() / 2];
            let (analytic_gmacs, params) = analytic_columns(backend, n);
            let record = BenchRecord {
                backend: backend.name().into(),
                n,
                wall_secs: median,
                analytic_gmacs,
                params,
                embed_passes: stats.embed_passes,
                pair_passes: stats.pair_passes,
            };
            progress(&record);
            records.push(record);
        }
    }
    Ok(records)
}

/// Least-squares slope of `ln(wall)` against `ln(n)` for one backend,
/// restricted to sizes `>= min_n`. Needs at least two such sizes.
pub fn loglog_slope(records: &[BenchRecord], backend: &str, min_n: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.backend == backend && r.n >= min_n && r.wall_secs > 0.0)
        .map(|r| ((r.n as f64).ln(), r.wall_secs.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if var == 0.0 {
        return None;
    }
    Some(cov / var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use puzzle_cm_core::Sequential;

    #[test]
    fn bench_counts_passes_exactly() {
        let records = run_bench(
            &[BenchBackend::Edge2Vec, BenchBackend::E2eProxy],
            &[6],
            1,
            8,
            &Sequential,
            |_| {},
        )
        .unwrap();
        let edge = records.iter().find(|r| r.backend == "edge2vec").unwrap();
        assert_eq!(edge.embed_passes, 8 * 6);
        let e2e = records.iter().find(|r| r.backend == "e2e_proxy").unwrap();
        assert_eq!(e2e.pair_passes, 16 * 6 * 5);
    }

    #[test]
    fn analytic_columns_match_the_published_coefficients() {
        let (gmacs, params) = analytic_columns(BenchBackend::Edge2Vec, 100);
        assert!((gmacs.unwrap() / 100.0 - 1.4).abs() < 0.05);
        assert_eq!(params.unwrap(), 2_053_056);
        let (gmacs, params) = analytic_columns(BenchBackend::E2eProxy, 100);
        assert!((gmacs.unwrap() / (100.0 * 100.0) - 5.6).abs() < 0.05);
        assert_eq!(params.unwrap(), 1_601_153);
    }

    #[test]
    fn slope_fit_recovers_powers() {
        let mk = |n: usize, wall: f64| BenchRecord {
            backend: "x".into(),
            n,
            wall_secs: wall,
            analytic_gmacs: None,
            params: None,
            embed_passes: 0,
            pair_passes: 0,
        };
        let records: Vec<BenchRecord> =
            [100usize, 200, 400].iter().map(|&n| mk(n, (n * n) as f64)).collect();
        let slope = loglog_slope(&records, "x", 100).unwrap();
        assert!((slope - 2.0).abs() < 1e-9);
    }

    #[test]
    fn synthetic_puzzles_have_requested_size() {
        for n in [7usize, 16, 30] {
            let b = synthetic_puzzle(n, 8, 1).unwrap();
            assert_eq!(b.len(), n);
        }
    }
}

//! Property tests: every on-disk format round-trips bit-exactly over
//! randomly generated values.

use proptest::prelude::*;

use puzzle_cm::formats::{
    load_bundle, load_checkpoint, load_cm_tensor, load_pair_checkpoint, load_placement,
    save_bundle, save_checkpoint, save_cm_tensor, save_pair_checkpoint, save_placement,
};
use puzzle_cm_core::cm::CmTensor;
use puzzle_cm_core::image::Image;
use puzzle_cm_core::net::{ModelConfig, ModelParams, PairNetConfig, PairNetParams};
use puzzle_cm_core::puzzle::{cut_puzzle, scramble, ProblemType, PuzzleBundle};
use puzzle_cm_core::solver::Placement;

fn arb_bundle() -> impl Strategy<Value = PuzzleBundle> {
    (
        1usize..=3,
        1usize..=3,
        any::<u64>(),
        any::<bool>(),
        0usize..=1,
        proptest::collection::vec(0u8..=255, 0..16),
    )
        .prop_map(|(rows, cols, seed, type2, erosion, noise)| {
            let h = rows * 8;
            let w = cols * 8;
            let bytes: Vec<u8> = (0..h * w * 3)
                .map(|i| {
                    let n = noise.get(i % noise.len().max(1)).copied().unwrap_or(37);
                    ((i * 31) as u8).wrapping_add(n)
                })
                .collect();
            let img = Image::from_u8(h, w, 3, &bytes).unwrap();
            let grid = cut_puzzle(&img, 8, None).unwrap().eroded(erosion).unwrap();
            let pt = if type2 { ProblemType::Type2 } else { ProblemType::Type1 };
            scramble(&grid, pt, seed, "prop")
        })
}

fn arb_tensor() -> impl Strategy<Value = CmTensor> {
    (2usize..=4, any::<bool>(), any::<u64>()).prop_map(|(n, type2, seed)| {
        let pt = if type2 { ProblemType::Type2 } else { ProblemType::Type1 };
        let mut t = CmTensor::new_sentinel(n, pt);
        let mut state = seed | 1;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state % 100_000) as f32 / 1000.0
        };
        let combos: Vec<(u8, u8)> = if pt == ProblemType::Type1 {
            vec![(0, 0), (1, 1)]
        } else {
            (0..4u8).flat_map(|a| (0..4u8).map(move |b| (a, b))).collect()
        };
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for &(ri, rj) in &combos {
                    t.set(i, ri, j, rj, next());
                }
            }
        }
        t
    })
}

fn arb_placement() -> impl Strategy<Value = Placement> {
    (1usize..=4, 1usize..=4, any::<u64>()).prop_map(|(rows, cols, seed)| {
        let n = rows * cols;
        let mut order: Vec<usize> = (0..n).collect();
        // Cheap seeded shuffle.
        let mut state = seed | 1;
        for i in (1..n).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            order.swap(i, (state as usize) % (i + 1));
        }
        let cells = order
            .into_iter()
            .enumerate()
            .map(|(cell, p)| {
                if cell == 0 && n > 1 {
                    None
                } else {
                    Some((p, ((seed as usize + cell) % 4) as u8))
                }
            })
            .collect();
        Placement { rows, cols, cells }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn bundle_round_trips(bundle in arb_bundle()) {
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&bundle, dir.path()).unwrap();
        prop_assert_eq!(load_bundle(dir.path()).unwrap(), bundle);
    }

    #[test]
    fn tensor_round_trips(tensor in arb_tensor()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cmt");
        save_cm_tensor(&tensor, &path).unwrap();
        let back = load_cm_tensor(&path).unwrap();
        prop_assert_eq!(back.raw(), tensor.raw());
        prop_assert_eq!(back.problem_type(), tensor.problem_type());
    }

    #[test]
    fn placement_round_trips(placement in arb_placement()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.json");
        save_placement(&placement, &path).unwrap();
        prop_assert_eq!(load_placement(&path).unwrap(), placement);
    }

    #[test]
    fn checkpoint_round_trips(seed in any::<u64>(), groups in prop::sample::select(vec![1usize, 2, 4]), twin in any::<bool>()) {
        let cfg = ModelConfig {
            piece_size: 8,
            channels_in: 3,
            conv_channels: [2, 3, 4, 4],
            embedding_dim: 8,
            groups,
            twin,
        };
        let params: ModelParams<f32> = ModelParams::init(cfg, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_checkpoint(&params, dir.path()).unwrap();
        let back = load_checkpoint(dir.path()).unwrap();
        prop_assert_eq!(back.config(), params.config());
        prop_assert_eq!(back.data, params.data);
    }

    #[test]
    fn pair_checkpoint_round_trips(seed in any::<u64>()) {
        let cfg = PairNetConfig {
            piece_size: 8,
            channels_in: 3,
            conv_channels: [1, 2, 2, 2],
        };
        let params: PairNetParams<f32> = PairNetParams::init(cfg, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_pair_checkpoint(&params, dir.path()).unwrap();
        prop_assert_eq!(load_pair_checkpoint(dir.path()).unwrap().data, params.data);
    }
}

//! Central finite differences against the analytic gradients of the
//! combined loss, on a reduced 64-bit network. Covers both lambda values and
//! both hinge regimes; the hard-negative selection is frozen at the
//! evaluation point, matching the locally-constant-argmin convention of the
//! backward pass.
//!
//! Finite differences on a ReLU stack are only meaningful away from the
//! kinks: the inputs are scaled so every activation sits far from zero
//! relative to the 1e-3 step, and the margins are chosen so the hinge is
//! active (or clipped) by a wide margin.

use puzzle_cm_core::net::{
    embed_backward, embed_forward, embed_forward_cached, EmbedCache, ModelConfig, ModelParams,
    Side, Workspace,
};
use puzzle_cm_core::trainer::{
    euclidean, hbt_select, loss_backward, total_loss, BatchEmbeddings, Candidate, EdgeId,
};

const STEP: f64 = 1e-3;

/// Finite differences at a fixed step are only exact where the loss is
/// smooth. Flipping every weight positive (biases stay zero) and feeding
/// positive inputs keeps all ReLU pre-activations strictly positive, so no
/// kink lies within reach of the step and the check is deterministic.
fn positive_params(cfg: &ModelConfig, seed: u64) -> ModelParams<f64> {
    let mut params: ModelParams<f64> = ModelParams::init(cfg.clone(), seed).unwrap();
    for v in &mut params.data {
        *v = v.abs();
    }
    params
}

fn tiny_config() -> ModelConfig {
    ModelConfig {
        piece_size: 8,
        channels_in: 3,
        conv_channels: [2, 3, 4, 4],
        embedding_dim: 8,
        groups: 2,
        twin: false,
    }
}

/// Deterministic pseudo-random inputs in [-scale, scale].
fn make_input(cfg: &ModelConfig, phase: usize, scale: f64) -> Vec<f64> {
    let len = cfg.channels_in * cfg.piece_size * cfg.piece_size;
    (0..len)
        .map(|v| (0.25 + ((v * 131 + phase * 313 + 17) % 1009) as f64 / 1009.0) * scale)
        .collect()
}

fn embed_batch(
    params: &ModelParams<f64>,
    ins: &[Vec<f64>],
    batch: usize,
) -> BatchEmbeddings<f64> {
    let mut ws = Workspace::new();
    let dim = params.config().embedding_dim;
    let mut emb = BatchEmbeddings {
        batch,
        dim,
        anchors: Vec::new(),
        positives: Vec::new(),
        negatives: Vec::new(),
        positive_edges: (0..batch as u32)
            .map(|p| EdgeId { image: 0, piece: p, dir: 0 })
            .collect(),
        negative_edges: (0..batch as u32)
            .map(|p| EdgeId { image: 1, piece: p, dir: 0 })
            .collect(),
    };
    for b in 0..batch {
        emb.anchors
            .extend(embed_forward(params, Side::Right, &ins[3 * b], &mut ws).unwrap());
        emb.positives
            .extend(embed_forward(params, Side::Right, &ins[3 * b + 1], &mut ws).unwrap());
        emb.negatives
            .extend(embed_forward(params, Side::Right, &ins[3 * b + 2], &mut ws).unwrap());
    }
    emb
}

fn loss_at(
    params: &ModelParams<f64>,
    ins: &[Vec<f64>],
    batch: usize,
    selection: &[Candidate],
    margin: f64,
    lambda: f64,
) -> f64 {
    let emb = embed_batch(params, ins, batch);
    total_loss(&emb, selection, margin, lambda)
}

fn analytic_grads(
    params: &ModelParams<f64>,
    ins: &[Vec<f64>],
    batch: usize,
    selection: &[Candidate],
    margin: f64,
    lambda: f64,
) -> Vec<f64> {
    let emb = embed_batch(params, ins, batch);
    let gz = loss_backward(&emb, selection, margin, lambda);
    let dim = emb.dim;
    let mut grads = vec![0.0; params.layout().total];
    let mut cache = EmbedCache::default();
    for b in 0..batch {
        for (input, dz) in [
            (&ins[3 * b], &gz.danchors[b * dim..(b + 1) * dim]),
            (&ins[3 * b + 1], &gz.dpositives[b * dim..(b + 1) * dim]),
            (&ins[3 * b + 2], &gz.dnegatives[b * dim..(b + 1) * dim]),
        ] {
            if dz.iter().all(|&v| v == 0.0) {
                continue;
            }
            embed_forward_cached(params, Side::Right, input, &mut cache).unwrap();
            embed_backward(params, Side::Right, &cache, dz, &mut grads).unwrap();
        }
    }
    grads
}

/// Runs the check and returns the worst entrywise relative error.
fn run_check(
    params: &ModelParams<f64>,
    ins: &[Vec<f64>],
    batch: usize,
    selection: &[Candidate],
    margin: f64,
    lambda: f64,
) -> f64 {
    let analytic = analytic_grads(params, ins, batch, selection, margin, lambda);
    let mut perturbed = params.clone();
    let mut worst = 0.0f64;
    for k in 0..perturbed.layout().total {
        let orig = perturbed.data[k];
        perturbed.data[k] = orig + STEP;
        let up = loss_at(&perturbed, ins, batch, selection, margin, lambda);
        perturbed.data[k] = orig - STEP;
        let down = loss_at(&perturbed, ins, batch, selection, margin, lambda);
        perturbed.data[k] = orig;
        let fd = (up - down) / (2.0 * STEP);
        let rel = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gradients_match_finite_differences_hinge_active() {
    let cfg = tiny_config();
    let batch = 2;
    let params = positive_params(&cfg, 11);
    assert!(params.layout().total <= 50_000);
    let ins: Vec<Vec<f64>> = (0..3 * batch).map(|p| make_input(&cfg, p, 1.0)).collect();

    let emb = embed_batch(&params, &ins, batch);
    let selection = hbt_select(&emb).unwrap();
    // Pick a margin that keeps every hinge active by a wide buffer.
    let mut margin = 0.0f64;
    for b in 0..batch {
        let d_ap = euclidean(emb.anchor(b), emb.positive(b));
        let cand = if selection[b].from_positives {
            emb.positive(selection[b].index)
        } else {
            emb.negative(selection[b].index)
        };
        let d_an = euclidean(emb.anchor(b), cand);
        margin = margin.max(d_an - d_ap + 5.0);
    }

    for lambda in [0.0, 1.0] {
        let worst = run_check(&params, &ins, batch, &selection, margin, lambda);
        assert!(worst <= 1e-3, "lambda={lambda}: max rel err {worst}");
    }
}

#[test]
fn gradients_match_finite_differences_hinge_inactive() {
    let cfg = tiny_config();
    let batch = 2;
    let params = positive_params(&cfg, 13);
    // Anchor and positive share the same input, so D(a, p) stays exactly
    // zero and the margin-1 hinge clips as long as the hardest negative is
    // clearly more than 1 away.
    let mut ins: Vec<Vec<f64>> = Vec::new();
    for b in 0..batch {
        let shared = make_input(&cfg, 2 * b, 1.0);
        ins.push(shared.clone());
        ins.push(shared);
        ins.push(make_input(&cfg, 2 * b + 1, 1.3));
    }

    let emb = embed_batch(&params, &ins, batch);
    let selection = hbt_select(&emb).unwrap();
    for b in 0..batch {
        let cand = if selection[b].from_positives {
            emb.positive(selection[b].index)
        } else {
            emb.negative(selection[b].index)
        };
        let d_an = euclidean(emb.anchor(b), cand);
        assert!(d_an > 2.0, "test point too degenerate: D(a, n*) = {d_an}");
    }

    for lambda in [0.0, 1.0] {
        let worst = run_check(&params, &ins, batch, &selection, 1.0, lambda);
        assert!(worst <= 1e-3, "lambda={lambda}: max rel err {worst}");
    }
}

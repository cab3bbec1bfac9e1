//! Finite-difference check of the loss gradients with respect to the
//! embeddings themselves (no network involved): hinge plus regularizer,
//! with the hard-negative selection frozen.

use puzzle_cm_core::trainer::{
    hbt_select, loss_backward, total_loss, BatchEmbeddings, EdgeId,
};

#[test]
fn loss_gradients_match_finite_differences() {
    let b = 3usize;
    let d = 4usize;
    let mk = |seed: usize| -> Vec<f64> {
        (0..b * d)
            .map(|v| ((v * 97 + seed * 131 + 7) % 523) as f64 / 523.0 - 0.4)
            .collect()
    };
    let emb = BatchEmbeddings {
        batch: b,
        dim: d,
        anchors: mk(1),
        positives: mk(2),
        negatives: mk(3),
        positive_edges: (0..b as u32).map(|p| EdgeId { image: 0, piece: p, dir: 0 }).collect(),
        negative_edges: (0..b as u32).map(|p| EdgeId { image: 1, piece: p, dir: 0 }).collect(),
    };
    let sel = hbt_select(&emb).unwrap();
    for lambda in [0.0, 1.0] {
        let g = loss_backward(&emb, &sel, 0.9, lambda);
        let h = 1e-6;
        let mut worst = 0.0f64;
        let mut report = String::new();
        for (arr_i, name) in [(0, "anchors"), (1, "positives"), (2, "negatives")] {
            for k in 0..b * d {
                let mut e2 = emb.clone();
                {
                    let arr = match arr_i { 0 => &mut e2.anchors, 1 => &mut e2.positives, _ => &mut e2.negatives };
                    arr[k] += h;
                }
                let up = total_loss(&e2, &sel, 0.9, lambda);
                {
                    let arr = match arr_i { 0 => &mut e2.anchors, 1 => &mut e2.positives, _ => &mut e2.negatives };
                    arr[k] -= 2.0 * h;
                }
                let dn = total_loss(&e2, &sel, 0.9, lambda);
                let fd = (up - dn) / (2.0 * h);
                let an = match arr_i { 0 => g.danchors[k], 1 => g.dpositives[k], _ => g.dnegatives[k] };
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                if rel > worst { worst = rel; report = format!("{name}[{k}] fd={fd} an={an}"); }
            }
        }
        assert!(worst < 1e-4, "lambda={lambda} worst {worst} at {report}");
    }
}

//! Triplet losses over batches of edge embeddings: plain triplet loss,
//! hard-batch-triplet selection with collision masking, the L2 embedding
//! regularizer, and the gradients of the combined objective with respect to
//! every embedding in the batch.

use alloc::vec;
use alloc::vec::Vec;

use super::EdgeId;
use crate::{Error, Real, Result};

/// Euclidean distance between two equal-length vectors.
pub fn euclidean<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        let d = x - y;
        acc = acc + d * d;
    }
    acc.sqrt()
}

/// Plain triplet loss `max(0, D(a,p) - D(a,n) + margin)`.
pub fn triplet_loss<F: Real>(anchor: &[F], positive: &[F], negative: &[F], margin: F) -> F {
    let v = euclidean(anchor, positive) - euclidean(anchor, negative) + margin;
    if v > F::zero() {
        v
    } else {
        F::zero()
    }
}

/// The `B x d` anchor/positive/negative embeddings of one batch, flattened
/// row-major, along with the edge identities needed for collision masking.
#[derive(Debug, Clone)]
pub struct BatchEmbeddings<F> {
    pub batch: usize,
    pub dim: usize,
    pub anchors: Vec<F>,
    pub positives: Vec<F>,
    pub negatives: Vec<F>,
    pub positive_edges: Vec<EdgeId>,
    pub negative_edges: Vec<EdgeId>,
}

impl<F: Real> BatchEmbeddings<F> {
    pub fn anchor(&self, b: usize) -> &[F] {
        &self.anchors[b * self.dim..(b + 1) * self.dim]
    }

    pub fn positive(&self, b: usize) -> &[F] {
        &self.positives[b * self.dim..(b + 1) * self.dim]
    }

    pub fn negative(&self, b: usize) -> &[F] {
        &self.negatives[b * self.dim..(b + 1) * self.dim]
    }

    fn candidate(&self, c: Candidate) -> &[F] {
        if c.from_positives {
            self.positive(c.index)
        } else {
            self.negative(c.index)
        }
    }

    fn candidate_edge(&self, c: Candidate) -> EdgeId {
        if c.from_positives {
            self.positive_edges[c.index]
        } else {
            self.negative_edges[c.index]
        }
    }
}

/// A member of the shared 2B candidate pool, in tie-break order: all
/// positives by batch index, then all negatives by batch index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub from_positives: bool,
    pub index: usize,
}

fn pool_iter(batch: usize) -> impl Iterator<Item = Candidate> {
    (0..batch)
        .map(|index| Candidate {
            from_positives: true,
            index,
        })
        .chain((0..batch).map(|index| Candidate {
            from_positives: false,
            index,
        }))
}

/// Picks the hardest admissible negative for every anchor: the pool is all
/// positives and negatives of the batch, minus the anchor's own positive and
/// minus every candidate whose edge identity collides with the anchor's
/// ground-truth positive edge. Ties go to the earliest pool entry
/// (positives before negatives, lowest batch index first).
pub fn hbt_select<F: Real>(emb: &BatchEmbeddings<F>) -> Result<Vec<Candidate>> {
    if emb.batch < 2 {
        return Err(Error::InvalidArgument(
            "hard-batch selection needs a batch of at least 2".into(),
        ));
    }
    let mut chosen = Vec::with_capacity(emb.batch);
    for b in 0..emb.batch {
        let anchor = emb.anchor(b);
        let blocked = emb.positive_edges[b];
        let mut best: Option<(Candidate, F)> = None;
        for cand in pool_iter(emb.batch) {
            if emb.candidate_edge(cand) == blocked {
                continue;
            }
            let dist = euclidean(anchor, emb.candidate(cand));
            match best {
                Some((_, d)) if dist >= d => {}
                _ => best = Some((cand, dist)),
            }
        }
        chosen.push(best.ok_or(Error::EmptyCandidatePool)?.0);
    }
    Ok(chosen)
}

/// The trivial selection used when hard-batch mining is disabled: every
/// anchor keeps its own negative.
pub fn own_negatives(batch: usize) -> Vec<Candidate> {
    (0..batch)
        .map(|index| Candidate {
            from_positives: false,
            index,
        })
        .collect()
}

/// Mean hinge loss over the batch with the selected negatives.
pub fn hbt_loss<F: Real>(emb: &BatchEmbeddings<F>, selection: &[Candidate], margin: F) -> F {
    let mut total = F::zero();
    for b in 0..emb.batch {
        total = total
            + triplet_loss(
                emb.anchor(b),
                emb.positive(b),
                emb.candidate(selection[b]),
                margin,
            );
    }
    total / F::of_usize(emb.batch)
}

/// RMS of all anchor/positive/negative embedding components:
/// `sqrt(sum(za^2 + zp^2 + zn^2) / (3 B d))`. Always uses the original
/// negatives, not the selected hardest ones.
pub fn l2_reg<F: Real>(emb: &BatchEmbeddings<F>) -> F {
    let mut acc = F::zero();
    for v in emb
        .anchors
        .iter()
        .chain(&emb.positives)
        .chain(&emb.negatives)
    {
        acc = acc + *v * *v;
    }
    (acc / F::of_usize(3 * emb.batch * emb.dim)).sqrt()
}

/// Combined objective: mean hard-batch hinge plus `lambda` times the L2
/// regularizer.
pub fn total_loss<F: Real>(
    emb: &BatchEmbeddings<F>,
    selection: &[Candidate],
    margin: F,
    lambda: F,
) -> F {
    hbt_loss(emb, selection, margin) + lambda * l2_reg(emb)
}

/// Gradients of [`total_loss`] with respect to every embedding in the batch.
/// The argmin selection is treated as locally constant and the hinge uses
/// subgradient zero at its kink.
#[derive(Debug, Clone)]
pub struct BatchGrads<F> {
    pub danchors: Vec<F>,
    pub dpositives: Vec<F>,
    pub dnegatives: Vec<F>,
}

pub fn loss_backward<F: Real>(
    emb: &BatchEmbeddings<F>,
    selection: &[Candidate],
    margin: F,
    lambda: F,
) -> BatchGrads<F> {
    let d = emb.dim;
    let b_count = emb.batch;
    let inv_b = F::one() / F::of_usize(b_count);
    let mut g = BatchGrads {
        danchors: vec![F::zero(); b_count * d],
        dpositives: vec![F::zero(); b_count * d],
        dnegatives: vec![F::zero(); b_count * d],
    };

    for b in 0..b_count {
        let anchor = emb.anchor(b);
        let positive = emb.positive(b);
        let chosen = selection[b];
        let hardest = emb.candidate(chosen);
        let d_ap = euclidean(anchor, positive);
        let d_an = euclidean(anchor, hardest);
        if d_ap - d_an + margin <= F::zero() {
            continue;
        }
        // d/dx of D(a, x) is (x - a) / D; zero when the vectors coincide.
        if d_ap > F::zero() {
            for i in 0..d {
                let u = (anchor[i] - positive[i]) / d_ap * inv_b;
                g.danchors[b * d + i] = g.danchors[b * d + i] + u;
                g.dpositives[b * d + i] = g.dpositives[b * d + i] - u;
            }
        }
        if d_an > F::zero() {
            let dst = if chosen.from_positives {
                &mut g.dpositives
            } else {
                &mut g.dnegatives
            };
            for i in 0..d {
                let u = (anchor[i] - hardest[i]) / d_an * inv_b;
                g.danchors[b * d + i] = g.danchors[b * d + i] - u;
                dst[chosen.index * d + i] = dst[chosen.index * d + i] + u;
            }
        }
    }

    if lambda > F::zero() {
        let r = l2_reg(emb);
        if r > F::zero() {
            let scale = lambda / (F::of_usize(3 * b_count * d) * r);
            for (dst, src) in [
                (&mut g.danchors, &emb.anchors),
                (&mut g.dpositives, &emb.positives),
                (&mut g.dnegatives, &emb.negatives),
            ] {
                for (o, &z) in dst.iter_mut().zip(src) {
                    *o = *o + scale * z;
                }
            }
        }
    }
    g
}

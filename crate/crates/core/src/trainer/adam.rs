//! Adam optimizer state over a flat parameter vector.

use alloc::vec;
use alloc::vec::Vec;

use crate::Real;

pub struct AdamState<F> {
    m: Vec<F>,
    v: Vec<F>,
    t: i32,
    beta1: F,
    beta2: F,
    eps: F,
}

impl<F: Real> AdamState<F> {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![F::zero(); len],
            v: vec![F::zero(); len],
            t: 0,
            beta1: F::of_f64(0.9),
            beta2: F::of_f64(0.999),
            eps: F::of_f64(1e-8),
        }
    }

    pub fn step(&mut self, params: &mut [F], grads: &[F], lr: F) {
        debug_assert_eq!(params.len(), grads.len());
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let b1 = self.beta1;
        let b2 = self.beta2;
        let bc1 = F::one() - b1.powi(self.t);
        let bc2 = F::one() - b2.powi(self.t);
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (F::one() - b1) * g;
            *v = b2 * *v + (F::one() - b2) * g * g;
            let mhat = *m / bc1;
            let vhat = *v / bc2;
            *p = *p - lr * mhat / (vhat.sqrt() + self.eps);
        }
    }
}

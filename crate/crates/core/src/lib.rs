//! Core algorithms for square jigsaw puzzles: puzzle cutting and scrambling,
//! classical pairwise compatibility measures (SSD, L1, PBC, MGC), an
//! edge-embedding CNN with grouped projection and hard-batch-triplet training,
//! full compatibility-tensor computation with post-processing, and a greedy
//! reconstruction solver with evaluation metrics.
//!
//! Everything in this crate is pure computation over `alloc`; file formats,
//! image decoding, threading and the CLI live in the companion `puzzle-cm`
//! crate.
//!
//! Scores are oriented as dissimilarities throughout: lower means more
//! compatible.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classical;
pub mod cm;
pub mod error;
pub mod exec;
pub mod image;
pub mod net;
pub mod piece;
pub mod puzzle;
pub mod solver;
pub mod trainer;

pub use error::{Error, Result};
pub use exec::{ParallelMap, Sequential};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type for the numeric kernels. Production code runs
/// on `f32`; the gradient-check tests instantiate the same kernels with `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + core::fmt::Debug + core::fmt::Display + Send + Sync + 'static
{
    fn of_f32(v: f32) -> Self {
        <Self as FromPrimitive>::from_f32(v).expect("f32 conversion")
    }
    fn of_f64(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 conversion")
    }
    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize conversion")
    }
    fn as_f32(self) -> f32 {
        <Self as ToPrimitive>::to_f32(&self).expect("f32 conversion")
    }
    fn as_f64(self) -> f64 {
        <Self as ToPrimitive>::to_f64(&self).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}

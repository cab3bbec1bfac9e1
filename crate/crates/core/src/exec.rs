//! Minimal pluggable parallelism. The core crate only ever expresses
//! "evaluate independent jobs 0..n and give me the results in index order";
//! the std companion crate supplies a thread-pool implementation. Results are
//! always combined in index order, so the output is identical for any
//! implementation with the same `chunk_count`.

use alloc::vec::Vec;

/// Index-ordered parallel map over independent jobs.
pub trait ParallelMap: Sync {
    /// How many contiguous chunks callers should partition reductions into.
    /// Reductions folded in chunk order are deterministic for a fixed count.
    fn chunk_count(&self) -> usize;

    /// Evaluate `f(0), ..., f(jobs - 1)` and return the results in index
    /// order.
    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync;
}

/// Runs every job on the calling thread.
pub struct Sequential;

impl ParallelMap for Sequential {
    fn chunk_count(&self) -> usize {
        1
    }

    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        (0..jobs).map(f).collect()
    }
}

/// Splits `len` items into `chunks` contiguous ranges of near-equal size.
pub fn chunk_ranges(len: usize, chunks: usize) -> Vec<core::ops::Range<usize>> {
    let chunks = chunks.max(1).min(len.max(1));
    let base = len / chunks;
    let extra = len % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let size = base + usize::from(c < extra);
        out.push(start..start + size);
        start += size;
    }
    out
}

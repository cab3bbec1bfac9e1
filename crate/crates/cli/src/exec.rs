//! Scoped-thread implementation of the core's `ParallelMap`. Jobs are split
//! into one contiguous index range per worker and results are returned in
//! index order, so any worker count yields the same job-level outputs and
//! reductions folded in chunk order are reproducible per worker count.

use puzzle_cm_core::exec::chunk_ranges;
use puzzle_cm_core::ParallelMap;

/// Runs jobs on up to `0.max(1)` OS threads.
pub struct Threads(pub usize);

impl Threads {
    /// One thread per available CPU.
    pub fn available() -> Self {
        Threads(
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1),
        )
    }
}

impl ParallelMap for Threads {
    fn chunk_count(&self) -> usize {
        self.0.max(1)
    }

    fn map<T, F>(&self, jobs: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.0.max(1).min(jobs.max(1));
        if workers <= 1 {
            return (0..jobs).map(f).collect();
        }
        let ranges = chunk_ranges(jobs, workers);
        let mut results: Vec<Vec<T>> = Vec::new();
        std::thread::scope(|scope| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|range| {
                    let f = &f;
                    let range = range.clone();
                    scope.spawn(move || range.map(f).collect::<Vec<T>>())
                })
                .collect();
            for h in handles {
                results.push(h.join().expect("worker panicked"));
            }
        });
        results.into_iter().flatten().collect()
    }
}

//! Internal parallelism control.
//!
//! The `CSS_LAB_THREADS` environment variable caps data parallelism; the
//! default of 1 keeps every run bitwise reproducible. Row transforms write
//! to disjoint slices, so results are identical for any thread count, but
//! reductions stay sequential regardless.

use std::sync::OnceLock;

static THREADS: OnceLock<usize> = OnceLock::new();

/// Number of worker threads, from `CSS_LAB_THREADS` (default 1).
pub fn thread_count() -> usize {
    *THREADS.get_or_init(|| {
        std::env::var("CSS_LAB_THREADS")
            .ok()
            .and_then(|s| s.trim().parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(1)
    })
}

static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();

fn pool() -> &'static rayon::ThreadPool {
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(thread_count())
            .build()
            .expect("thread pool construction")
    })
}

/// Apply `f` to each row (disjoint `chunk` sized slice) of `data`.
pub fn for_each_row<F>(data: &mut [num_complex::Complex64], chunk: usize, f: F)
where
    F: Fn(&mut [num_complex::Complex64]) + Sync,
{
    if thread_count() == 1 {
        for row in data.chunks_mut(chunk) {
            f(row);
        }
    } else {
        use rayon::prelude::*;
        pool().install(|| data.par_chunks_mut(chunk).for_each(|row| f(row)));
    }
}

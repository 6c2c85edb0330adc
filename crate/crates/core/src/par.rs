//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (default) [`Parallelism::Rayon`] fans work out
//! over the rayon pool; without it every mode runs on the calling thread.
//! Results never depend on the mode: work is split into a fixed set of
//! indexed tasks and reassembled in index order.

/// How to run an indexed batch of independent tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parallelism {
    Sequential,
    Rayon,
}

impl Default for Parallelism {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Parallelism::Rayon
        } else {
            Parallelism::Sequential
        }
    }
}

impl Parallelism {
    /// Whether tasks will actually run on more than one thread.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Parallelism::Rayon
    }

    /// Runs `f(0..tasks)` and returns the results in index order.
    pub fn map<T, F>(self, tasks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Parallelism::Rayon {
            use rayon::prelude::*;
            return (0..tasks).into_par_iter().map(f).collect();
        }
        (0..tasks).map(f).collect()
    }

    /// Like [`map`](Self::map) but stops at the first error (in index order
    /// for the sequential path; any failing task for the parallel path).
    pub fn try_map<T, E, F>(self, tasks: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Parallelism::Rayon {
            use rayon::prelude::*;
            return (0..tasks).into_par_iter().map(f).collect();
        }
        (0..tasks).map(f).collect()
    }
}

/// Splits `total` items into `parts` contiguous ranges of near-equal size.
pub fn split_even(total: u64, parts: usize) -> Vec<std::ops::Range<u64>> {
    let parts = parts.max(1) as u64;
    let base = total / parts;
    let extra = total % parts;
    let mut start = 0;
    (0..parts)
        .map(|i| {
            let len = base + u64::from(i < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect()
}

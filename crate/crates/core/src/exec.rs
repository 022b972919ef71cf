//! Execution policy for the data-parallel loops (design-map cells, per-robot
//! forces, multi-seed sweeps).
//!
//! Every parallel map evaluates the same closure per index and collects in
//! index order, so `Sequential` and `Parallel` produce bit-identical results.
//! Without the `parallel` feature, `Parallel` silently runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many items per-robot force maps stay on the calling thread.
pub const MIN_PARALLEL_ITEMS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `true` when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Map `f` over `0..n`, collecting results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Like [`Execution::map`] but only fans out when `n` reaches `min_items`.
    pub fn map_min<T, F>(self, n: usize, min_items: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        if n < min_items {
            Execution::Sequential.map(n, f)
        } else {
            self.map(n, f)
        }
    }

    /// Fallible map; the error of the lowest failing index is returned.
    pub fn try_map_min<T, E, F>(self, n: usize, min_items: usize, f: F) -> Result<Vec<T>, E>
    where
        T: Send,
        E: Send,
        F: Fn(usize) -> Result<T, E> + Sync + Send,
    {
        self.map_min(n, min_items, f).into_iter().collect()
    }
}

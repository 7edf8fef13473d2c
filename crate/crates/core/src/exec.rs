//! Execution strategy for the data-parallel loops (per-player sweeps,
//! sampling checks, oracle enumeration).
//!
//! With the `parallel` feature the [`Execution::Parallel`] variant fans out
//! over rayon's global pool. Without it, both variants run sequentially.
//! Results are always returned in index order, so output never depends on
//! the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and collects in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Smallest index `i < n` with `f(i) == Some(_)`.
    pub fn find_first<T, F>(self, n: usize, f: F) -> Option<(usize, T)>
    where
        T: Send,
        F: Fn(usize) -> Option<T> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n)
                .into_par_iter()
                .filter_map(|i| f(i).map(|v| (i, v)))
                .min_by_key(|(i, _)| *i);
        }
        (0..n).find_map(|i| f(i).map(|v| (i, v)))
    }
}

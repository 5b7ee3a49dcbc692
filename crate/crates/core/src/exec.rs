//! Execution strategy for data-parallel sweeps.
//!
//! With the `parallel` feature (on by default) work is spread over the rayon
//! global pool. Without it every strategy runs sequentially. Results are
//! always returned in index order, so output never depends on scheduling.

/// How an embarrassingly parallel sweep is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when this strategy actually fans out across threads.
    pub fn is_parallel(&self) -> bool {
        cfg!(feature = "parallel") && *self == Execution::Parallel
    }

    /// Evaluates `f(0..n)` and collects results in index order.
    pub fn map_indexed<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }
}

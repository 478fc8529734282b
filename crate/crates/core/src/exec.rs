//! Data-parallel map with a sequential fallback.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How independent work items are executed. Results come back in input order
/// either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Executor {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, otherwise runs
    /// sequentially.
    Parallel,
}

impl Default for Executor {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Executor::Parallel
        } else {
            Executor::Sequential
        }
    }
}

impl Executor {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Executor::Sequential => items.iter().map(f).collect(),
            Executor::Parallel => {
                #[cfg(feature = "parallel")]
                {
                    items.par_iter().map(f).collect()
                }

                #[cfg(not(feature = "parallel"))]
                {
                    items.iter().map(f).collect()
                }
            }
        }
    }
}

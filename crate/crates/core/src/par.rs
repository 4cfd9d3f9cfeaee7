//! Data-parallel helpers. With the `parallel` feature (on by default) the
//! [`Execution::Parallel`] strategy runs on the rayon pool; without it every
//! strategy runs sequentially. Results always come back in input order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
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
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    pub(crate) fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// `filter_map` over `0..n`, keeping index order.
    pub(crate) fn filter_map_range<R, F>(self, n: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64) -> Option<R> + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().filter_map(f).collect();
        }
        (0..n).filter_map(f).collect()
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! Every element loop in the crate goes through [`Exec::map`] or
//! [`Exec::sum`]. With the `parallel` feature (default) the loop may run on
//! the rayon pool; without it, or with [`Exec::Sequential`], it runs in order.
//! Results are always returned in index order so reductions that follow
//! are deterministic.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    /// Maps `f` over `0..n`, collecting in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Exec::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Sums `f` over `0..n`. The per-index values are collected first and
    /// added in order, so the result does not depend on the thread count.
    pub fn sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.map(n, f).iter().sum()
    }
}

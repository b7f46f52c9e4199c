//! Runtime switch between sequential and rayon-backed execution.
//!
//! Analyses over methods and the checker's frontier expansion are data
//! parallel. The `parallel` feature compiles the rayon lanes in; this enum
//! picks one at runtime so benchmarks can compare both in a single build.

/// Execution strategy for data-parallel passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    /// Plain iterators on the calling thread.
    Sequential,
    /// Rayon work-stealing pool. Falls back to sequential when the
    /// `parallel` feature is disabled.
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

/// Maps `items` preserving order, in parallel when requested and compiled in.
pub fn ordered_map<T, R, F>(mode: Parallelism, items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if mode == Parallelism::Rayon {
            use rayon::prelude::*;
            return items.into_par_iter().map(f).collect();
        }
    }
    let _ = mode;
    items.into_iter().map(f).collect()
}

//! Data-parallel loop primitives with a sequential fallback.
//!
//! Reductions are split into fixed-size chunks whose partial results are
//! combined left to right, so a sum is bit-identical whether it runs on one
//! thread, many threads, or with the `parallel` feature disabled.

use std::iter::Sum;

/// Number of indices per reduction chunk. Part of the determinism contract:
/// changing it changes the rounding of every reduction.
pub const CHUNK: usize = 2048;

/// Execution policy for the low-level kernels.
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

/// Deterministic `Σ_{i<len} f(i)` under the default policy.
pub fn sum_by<T, F>(len: usize, f: F) -> T
where
    T: Send + Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    sum_by_with(Exec::default(), len, f)
}

pub fn sum_by_with<T, F>(exec: Exec, len: usize, f: F) -> T
where
    T: Send + Sum<T>,
    F: Fn(usize) -> T + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial = |c: usize| -> T {
        let lo = c * CHUNK;
        let hi = (lo + CHUNK).min(len);
        (lo..hi).map(&f).sum()
    };
    let partials: Vec<T> = match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(partial).collect()
        }
        _ => (0..chunks).map(partial).collect(),
    };
    partials.into_iter().sum()
}

/// `out[i] = f(i)` for every index.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    fill_with(Exec::default(), out, f)
}

pub fn fill_with<T, F>(exec: Exec, out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    match exec {
        #[cfg(feature = "parallel")]
        Exec::Parallel => {
            use rayon::prelude::*;
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
                let base = c * CHUNK;
                for (k, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(base + k);
                }
            });
        }
        _ => {
            for (i, slot) in out.iter_mut().enumerate() {
                *slot = f(i);
            }
        }
    }
}

/// Calls `f(i, &mut out[i])` for every index.
pub fn for_each_mut<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
            let base = c * CHUNK;
            for (k, slot) in chunk.iter_mut().enumerate() {
                f(base + k, slot);
            }
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, slot) in out.iter_mut().enumerate() {
            f(i, slot);
        }
    }
}

/// Collects `f(0), …, f(len-1)`.
pub fn map_collect<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().with_min_len(CHUNK / 4).map(&f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Sizes the global worker pool. A no-op without the `parallel` feature.
/// Fails if the pool was already initialised with a different size.
pub fn configure_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return Err("thread count must be positive".into());
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            Ok(()) => Ok(()),
            Err(_) if rayon::current_num_threads() == threads => Ok(()),
            Err(e) => Err(e.to_string()),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}

/// Worker threads available to the default policy.
pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

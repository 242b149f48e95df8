//! Data-parallel helpers with a sequential fallback.
//!
//! Work is cut into fixed-size blocks whose boundaries depend only on the
//! problem size, and results come back in block order. Reductions done by
//! the caller over that ordered output are therefore identical for any
//! thread count, including the sequential build.

use std::ops::Range;

/// Default block length for Monte Carlo batches.
pub const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Exec {
    /// Use the rayon pool when the `parallel` feature is enabled.
    #[default]
    Parallel,
    Sequential,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

/// Apply `f` to each block of `0..total`, returning results in block order.
pub fn map_blocks<T, F>(exec: Exec, total: usize, block: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let block = block.max(1);
    let nblocks = total.div_ceil(block);
    let range = move |b: usize| b * block..((b + 1) * block).min(total);
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..nblocks).into_par_iter().map(|b| f(range(b))).collect();
    }
    let _ = exec;
    (0..nblocks).map(|b| f(range(b))).collect()
}

/// Apply `f` to every index of `0..total`, preserving order.
pub fn map_indexed<T, F>(exec: Exec, total: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        return (0..total).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..total).map(f).collect()
}

/// Apply `f` to every element of `items` in place.
pub fn for_each_mut<T, F>(exec: Exec, items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        use rayon::prelude::*;
        items.par_iter_mut().enumerate().for_each(|(i, t)| f(i, t));
        return;
    }
    let _ = exec;
    items.iter_mut().enumerate().for_each(|(i, t)| f(i, t));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_range_in_order() {
        let out = map_blocks(Exec::Parallel, 1000, 64, |r| (r.start, r.end));
        assert_eq!(out.len(), 16);
        assert_eq!(out[0], (0, 64));
        assert_eq!(out[15], (960, 1000));
        let seq = map_blocks(Exec::Sequential, 1000, 64, |r| (r.start, r.end));
        assert_eq!(out, seq);
    }

    #[test]
    fn empty_total() {
        assert!(map_blocks(Exec::Sequential, 0, 8, |r| r.len()).is_empty());
        assert!(map_indexed(Exec::Parallel, 0, |i| i).is_empty());
    }
}

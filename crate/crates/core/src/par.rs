//! Data-parallel helpers.
//!
//! With the `parallel` feature the loops below run on the rayon pool that is
//! current when they are called; without it they run sequentially. Results are
//! collected in index order and every reduction is folded over fixed-size
//! chunks in a fixed order, so output bits never depend on the thread count.

/// Rows per reduction chunk. Fixed so that summation order is independent of
/// the number of worker threads.
pub const CHUNK: usize = 128;

/// `(0..len).map(f).collect()`, possibly in parallel, preserving order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Maps `f` over the chunk ranges `[k*CHUNK, min((k+1)*CHUNK, len))` and
/// returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<usize>) -> T + Sync + Send,
{
    let chunks = len.div_ceil(CHUNK);
    map_indexed(chunks, |k| f(k * CHUNK..((k + 1) * CHUNK).min(len)))
}

/// Deterministic sum of `f(i)` for `i < len`.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_chunks(len, |r| r.map(&f).sum::<f64>())
        .into_iter()
        .sum()
}

/// Whether the crate was built with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn chunked_sum_matches_sequential_chunks() {
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let expected: f64 = (0..1000)
            .collect::<Vec<_>>()
            .chunks(CHUNK)
            .map(|c| c.iter().map(|&i| f(i)).sum::<f64>())
            .sum();
        assert_eq!(sum_indexed(1000, f).to_bits(), expected.to_bits());
    }

    #[test]
    fn empty_inputs() {
        assert!(map_indexed(0, |i| i).is_empty());
        assert_eq!(sum_indexed(0, |_| 1.0), 0.0);
    }
}

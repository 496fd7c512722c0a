//! Data-parallel loop helpers.
//!
//! With the `parallel` feature (default) these dispatch to rayon; without it
//! they run the same closures sequentially. Work is always split into the same
//! fixed chunks and partial results are returned in chunk order, so reductions
//! performed by callers are bit-identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default number of grid points handled per task.
pub const POINT_CHUNK: usize = 512;

/// Applies `f` to every mutable chunk of `data`; the closure receives the
/// chunk index.
pub fn for_each_chunk_mut<T, F>(data: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Send + Sync,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    data.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(i, c)| f(i, c));
    #[cfg(not(feature = "parallel"))]
    data.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Maps every chunk of `data` to a value; results are in chunk order.
pub fn map_chunks<T, R, F>(data: &[T], chunk: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(usize, &[T]) -> R + Send + Sync,
{
    let chunk = chunk.max(1);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks(chunk)
            .enumerate()
            .map(|(i, c)| f(i, c))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks(chunk).enumerate().map(|(i, c)| f(i, c)).collect()
    }
}

/// Evaluates `f(i)` for `i in 0..n`, results in index order.
pub fn map_range<R, F>(n: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Send + Sync,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Fills `out[i] = f(i)`.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    let chunk = POINT_CHUNK;
    for_each_chunk_mut(out, chunk, |ci, c| {
        let base = ci * chunk;
        for (j, v) in c.iter_mut().enumerate() {
            *v = f(base + j);
        }
    });
}

/// Sum of `f(i)` over `0..n` with a thread-count independent summation order.
pub fn sum_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    let chunks = n.div_ceil(POINT_CHUNK);
    map_range(chunks, |c| {
        let lo = c * POINT_CHUNK;
        let hi = (lo + POINT_CHUNK).min(n);
        (lo..hi).map(&f).sum::<f64>()
    })
    .into_iter()
    .sum()
}

/// Maximum of `f(i)` over `0..n` (NaN-propagating).
pub fn max_range<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Send + Sync,
{
    let chunks = n.div_ceil(POINT_CHUNK);
    map_range(chunks, |c| {
        let lo = c * POINT_CHUNK;
        let hi = (lo + POINT_CHUNK).min(n);
        (lo..hi).map(&f).fold(0.0_f64, nan_max)
    })
    .into_iter()
    .fold(0.0, nan_max)
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_is_chunk_ordered() {
        let n = 10_000;
        let a = sum_range(n, |i| 1.0 / (1.0 + i as f64));
        let b = sum_range(n, |i| 1.0 / (1.0 + i as f64));
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn max_propagates_nan() {
        assert!(max_range(1000, |i| if i == 777 { f64::NAN } else { 1.0 }).is_nan());
        assert_eq!(max_range(10, |i| i as f64), 9.0);
    }

    #[test]
    fn fill_and_map_cover_everything() {
        let mut v = vec![0usize; 2000];
        fill_indexed(&mut v, |i| 2 * i);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
        let sums = map_chunks(&v, 512, |_, c| c.len());
        assert_eq!(sums, vec![512, 512, 512, 464]);
    }
}

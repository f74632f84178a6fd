//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) these run on the ambient rayon pool;
//! without it they are plain iterator loops. Results are always collected in
//! index order so callers see the same output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, parallel over indices.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// `xs.iter().map(f).collect()`, parallel over elements.
pub fn map_slice<A, T, F>(xs: &[A], f: F) -> Vec<T>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        xs.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        xs.iter().map(f).collect()
    }
}

/// Number of worker threads the helpers will use.
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

/// Runs `f` with at most `threads` workers (0 = library default).
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// Max of `(value, key)` pairs with the lowest key winning ties, so the
/// selected witness does not depend on evaluation order.
pub fn argmax_by_key<K: Ord + Copy>(items: impl IntoIterator<Item = (f64, K)>) -> Option<(f64, K)> {
    let mut best: Option<(f64, K)> = None;
    for (v, k) in items {
        best = match best {
            None => Some((v, k)),
            Some((bv, bk)) => {
                if v > bv || (v == bv && k < bk) {
                    Some((v, k))
                } else {
                    Some((bv, bk))
                }
            }
        };
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordered_output() {
        let v = with_threads(3, || map_range(100, |i| i * i));
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn argmax_ties_pick_lowest_key() {
        let r = argmax_by_key([(1.0, 5usize), (2.0, 7), (2.0, 3), (0.5, 1)]);
        assert_eq!(r, Some((2.0, 3)));
        assert_eq!(argmax_by_key(Vec::<(f64, usize)>::new()), None);
    }
}

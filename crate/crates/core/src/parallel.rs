//! Index-ordered fan-out over independent work items.
//!
//! With the `parallel` feature the items are distributed over the current
//! rayon pool; without it they run in a plain loop. In both cases the output
//! vector is ordered by item index.

use crate::error::Result;

/// Evaluates `f(0), f(1), ..., f(count - 1)` and collects the results in index order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Like [`map_indexed`] but stops at the first error (lowest index wins).
pub fn try_map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    map_indexed(count, f).into_iter().collect()
}

/// Runs `f` with at most `jobs` worker threads. `None` uses the global pool.
///
/// Without the `parallel` feature everything is single-threaded and `jobs`
/// is ignored.
#[cfg(feature = "parallel")]
pub fn with_jobs<R, F>(jobs: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match jobs {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(not(feature = "parallel"))]
pub fn with_jobs<R, F>(_jobs: Option<usize>, f: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    Ok(f())
}

/// Whether this build distributes work across threads.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_index_order() {
        let out = map_indexed(1000, |i| i * 3);
        assert!(out.iter().enumerate().all(|(i, &v)| v == i * 3));
    }

    #[test]
    fn single_job_pool_gives_same_result() {
        let a = with_jobs(Some(1), || map_indexed(64, |i| (i as f64).sqrt())).unwrap();
        let b = with_jobs(None, || map_indexed(64, |i| (i as f64).sqrt())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_error_wins() {
        let r = try_map_indexed(10, |i| {
            if i >= 4 {
                Err(crate::Error::invalid("i", format!("{i}")))
            } else {
                Ok(i)
            }
        });
        assert!(matches!(r, Err(crate::Error::InvalidParameter { reason, .. }) if reason == "4"));
    }
}

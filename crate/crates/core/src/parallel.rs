//! Worker pool shared by the grid kernels. `RD_THREADS` caps the number of
//! workers; results never depend on it because every kernel writes into
//! index-addressed slots and reduces sequentially afterwards.

use std::sync::OnceLock;

use rayon::prelude::*;
use rayon::ThreadPool;

pub const THREADS_ENV: &str = "RD_THREADS";

fn threads_from_env() -> usize {
    std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()).filter(|&n| n > 0).unwrap_or(0)
}

fn global_pool() -> &'static ThreadPool {
    static POOL: OnceLock<ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| rayon::ThreadPoolBuilder::new().num_threads(threads_from_env()).build().expect("thread pool"))
}

/// Runs `f` inside a dedicated pool with exactly `threads` workers.
pub fn with_threads<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build().expect("thread pool").install(f)
}

/// Order-preserving parallel map. Inside [`with_threads`] the caller's pool
/// is used, otherwise the `RD_THREADS` pool.
pub fn par_map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    let run = || items.par_iter().map(&f).collect();
    if rayon::current_thread_index().is_some() {
        run()
    } else {
        global_pool().install(run)
    }
}

/// Like [`par_map`] for fallible work; reports the error of the lowest index.
pub fn try_par_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
where
    T: Sync,
    R: Send,
    E: Send,
    F: Fn(&T) -> Result<R, E> + Sync + Send,
{
    par_map(items, f).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved_across_thread_counts() {
        let items: Vec<u64> = (0..1000).collect();
        let one = with_threads(1, || par_map(&items, |x| x * x));
        let four = with_threads(4, || par_map(&items, |x| x * x));
        assert_eq!(one, four);
        assert_eq!(one[999], 998_001);
    }

    #[test]
    fn first_error_wins() {
        let items: Vec<i32> = (0..100).collect();
        let r: Result<Vec<i32>, i32> = try_par_map(&items, |&x| if x % 10 == 7 { Err(x) } else { Ok(x) });
        assert_eq!(r, Err(7));
    }
}

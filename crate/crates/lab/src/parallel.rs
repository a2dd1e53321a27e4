use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuildError, ThreadPoolBuilder};
use sde_tv_core::exec::Executor;

/// Rayon-backed executor. Results come back in index order, so output never
/// depends on the thread count.
pub struct RayonExecutor {
    pool: ThreadPool,
}

impl RayonExecutor {
    /// `threads = None` lets rayon pick.
    pub fn new(threads: Option<usize>) -> Result<Self, ThreadPoolBuildError> {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n);
        }
        Ok(RayonExecutor {
            pool: builder.build()?,
        })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for RayonExecutor {
    fn map<T, F>(&self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        self.pool
            .install(|| (0..n).into_par_iter().with_min_len(256).map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use sde_tv_core::exec::Sequential;

    #[test]
    fn matches_sequential_order() {
        let par = RayonExecutor::new(Some(3)).unwrap();
        let f = |i: usize| (i * i) as u64 ^ 0x5a;
        assert_eq!(par.map(10_000, f), Sequential.map(10_000, f));
        assert_eq!(par.threads(), 3);
    }
}

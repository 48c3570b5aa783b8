use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use spinbath_core::Runner;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "SPINBATH_WORKERS";

/// Runs work units on a private rayon pool. Results come back in index
/// order, so the output does not depend on the number of workers.
pub struct Parallel {
    pool: ThreadPool,
}

impl Parallel {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
        Ok(Self { pool })
    }

    /// Worker count from the environment, else the available parallelism.
    pub fn from_env() -> Result<Self, rayon::ThreadPoolBuildError> {
        Self::new(default_workers())
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n: &usize| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

impl Runner for Parallel {
    fn map<T: Send, F: Fn(usize) -> T + Sync + Send>(&self, n: usize, f: F) -> Vec<T> {
        self.pool.install(|| (0..n).into_par_iter().map(&f).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let p = Parallel::new(3).unwrap();
        let v = p.map(100, |i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
    }
}

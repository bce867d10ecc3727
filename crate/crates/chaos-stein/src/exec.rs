use std::sync::Arc;

use anyhow::{bail, Context};
use chaos_stein_core::mc::{Executor, MonteCarlo};
use rayon::prelude::*;
use rayon::ThreadPool;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "CHAOS_STEIN_THREADS";

/// Runs chunks on a rayon pool. Results come back in chunk order, so the
/// output does not depend on the thread count.
#[derive(Clone, Default)]
pub struct Rayon {
    pool: Option<Arc<ThreadPool>>,
}

impl std::fmt::Debug for Rayon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Rayon")
            .field("threads", &self.pool.as_ref().map(|p| p.current_num_threads()))
            .finish()
    }
}

impl Rayon {
    /// Uses the global rayon pool.
    pub fn global() -> Self {
        Self { pool: None }
    }

    pub fn with_threads(threads: usize) -> anyhow::Result<Self> {
        if threads == 0 {
            bail!("thread count must be positive");
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .context("building the worker pool")?;
        Ok(Self { pool: Some(Arc::new(pool)) })
    }

    /// Honors `CHAOS_STEIN_THREADS` when set.
    pub fn from_env() -> anyhow::Result<Self> {
        match std::env::var(THREADS_ENV) {
            Ok(v) => {
                let n: usize = v
                    .trim()
                    .parse()
                    .ok()
                    .filter(|&n| n > 0)
                    .with_context(|| format!("{THREADS_ENV} must be a positive integer, got {v:?}"))?;
                Self::with_threads(n)
            }
            Err(std::env::VarError::NotPresent) => Ok(Self::global()),
            Err(e) => bail!("{THREADS_ENV}: {e}"),
        }
    }
}

impl Executor for Rayon {
    fn map_chunks<T, F>(&self, chunks: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        let run = || (0..chunks).into_par_iter().map(&job).collect();
        match &self.pool {
            Some(p) => p.install(run),
            None => run(),
        }
    }
}

pub fn parallel(seed: u64, executor: Rayon) -> MonteCarlo<Rayon> {
    MonteCarlo::with_executor(seed, executor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chaos_stein_core::mc::CHUNK_LEN;
    use rand::Rng;

    #[test]
    fn thread_count_does_not_change_results() {
        let n = 3 * CHUNK_LEN + 17;
        let seq = MonteCarlo::new(5).mean(n, |r| r.random::<f64>());
        for t in [1, 2, 3] {
            let par = parallel(5, Rayon::with_threads(t).unwrap()).mean(n, |r| r.random::<f64>());
            assert_eq!(seq, par);
        }
    }
}

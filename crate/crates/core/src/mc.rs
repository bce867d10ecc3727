//! Reproducible Monte Carlo.
//!
//! A run with seed `s` and `N` samples is cut into fixed-size chunks of
//! [`CHUNK_LEN`] samples. Chunk `c` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `c`. Chunk results are
//! combined in chunk order, so the output is identical whether the chunks
//! run sequentially or on any number of threads.

#[allow(unused_imports)]
use num_traits::Float;

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per chunk.
pub const CHUNK_LEN: usize = 1 << 14;

/// Seed used whenever a caller does not supply one.
pub const DEFAULT_SEED: u64 = 0x5EED_C4A0_5EED;

/// Generator for chunk `chunk` of a run seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

/// Runs independent jobs indexed by chunk number and returns their results
/// in index order.
pub trait Executor: Sync {
    fn map_chunks<T, F>(&self, chunks: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs chunks one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map_chunks<T, F>(&self, chunks: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..chunks).map(job).collect()
    }
}

/// Seed plus executor; every Monte Carlo operation in the crate takes one.
#[derive(Debug, Clone, Copy)]
pub struct MonteCarlo<E = Sequential> {
    pub seed: u64,
    pub executor: E,
}

impl MonteCarlo<Sequential> {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            executor: Sequential,
        }
    }
}

impl<E: Executor> MonteCarlo<E> {
    pub fn with_executor(seed: u64, executor: E) -> Self {
        Self { seed, executor }
    }

    /// A derived run whose streams do not collide with this one.
    pub fn fork(&self, salt: u64) -> MonteCarlo<&E> {
        MonteCarlo {
            seed: splitmix(self.seed ^ splitmix(salt)),
            executor: &self.executor,
        }
    }

    /// Calls `job(rng, len)` once per chunk of an `n`-sample run.
    pub fn run<T, F>(&self, n: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng, usize) -> T + Sync + Send,
    {
        let chunks = n.div_ceil(CHUNK_LEN);
        let seed = self.seed;
        self.executor.map_chunks(chunks, |c| {
            let len = CHUNK_LEN.min(n - c * CHUNK_LEN);
            let mut rng = chunk_rng(seed, c as u64);
            job(&mut rng, len)
        })
    }

    /// Mean and standard error of `n` draws of `sample`.
    pub fn mean<F>(&self, n: usize, sample: F) -> Estimate
    where
        F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
    {
        let parts = self.run(n, |rng, len| {
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(sample(rng));
            }
            m
        });
        Moments::merge_all(parts).estimate()
    }

    /// Per-component means of a vector-valued sample of fixed width `K`.
    pub fn means<const K: usize, F>(&self, n: usize, sample: F) -> [Estimate; K]
    where
        F: Fn(&mut ChaCha8Rng) -> [f64; K] + Sync + Send,
    {
        let parts = self.run(n, |rng, len| {
            let mut m = [Moments::default(); K];
            for _ in 0..len {
                let x = sample(rng);
                for (acc, v) in m.iter_mut().zip(x) {
                    acc.push(v);
                }
            }
            m
        });
        let mut total = [Moments::default(); K];
        for part in parts {
            for (t, p) in total.iter_mut().zip(part) {
                t.merge(&p);
            }
        }
        total.map(|m| m.estimate())
    }

    /// All `n` draws, in chunk order.
    pub fn collect<T, F>(&self, n: usize, sample: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut ChaCha8Rng) -> T + Sync + Send,
    {
        let parts = self.run(n, |rng, len| (0..len).map(|_| sample(rng)).collect::<Vec<T>>());
        let mut out = Vec::with_capacity(n);
        for p in parts {
            out.extend(p);
        }
        out
    }
}

impl<E: Executor> Executor for &E {
    fn map_chunks<T, F>(&self, chunks: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (**self).map_chunks(chunks, job)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// |mean − target| in units of standard error (infinite when se = 0 and
    /// the mean is off target).
    pub fn z_score(&self, target: f64) -> f64 {
        let d = (self.mean - target).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.se
        }
    }
}

/// Streaming mean/variance (Welford) with Chan's pairwise merge.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.count as f64 / n;
        self.m2 += other.m2 + d * d * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn merge_all(parts: impl IntoIterator<Item = Moments>) -> Moments {
        let mut total = Moments::default();
        for p in parts {
            total.merge(&p);
        }
        total
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            se: (self.variance() / self.count.max(1) as f64).sqrt(),
            n: self.count,
        }
    }
}

//! Seeded, block-parallel path engine.
//!
//! Paths are grouped into fixed leaves of [`LEAF_PATHS`]. Each leaf draws from its
//! own ChaCha8 stream keyed by `(seed, leaf index)` and accumulates moments with
//! Welford updates; leaves are then merged pairwise in index order. Neither the
//! scheduling granularity nor the thread count changes which numbers are drawn or
//! the order in which they are combined, so results are bit-identical across both.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Paths per RNG stream and per moment accumulator.
pub const LEAF_PATHS: usize = 1024;

/// How leaves are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Rayon work-stealing over leaves; sequential when built without `parallel`.
    #[default]
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Minimum number of paths handed to one worker at a time.
    pub block_size: usize,
    /// Exact-transition steps per schedule segment (`[t,s]` and `[s,e]`).
    pub steps_per_segment: usize,
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(n_paths: usize, seed: u64) -> Result<Self> {
        let config = SimConfig {
            n_paths,
            seed,
            block_size: 16 * LEAF_PATHS,
            steps_per_segment: 1,
            execution: Execution::Parallel,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_block_size(mut self, block_size: usize) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn with_steps_per_segment(mut self, steps: usize) -> Self {
        self.steps_per_segment = steps;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::param("n_paths", "must be at least 1"));
        }
        if self.block_size == 0 {
            return Err(Error::param("block_size", "must be at least 1"));
        }
        if self.steps_per_segment == 0 {
            return Err(Error::param("steps_per_segment", "must be at least 1"));
        }
        Ok(())
    }
}

/// Monte Carlo estimate with its standard error.
///
/// The standard error is infinite when a single path gives no variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimResult {
    pub estimate: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl SimResult {
    /// Whether `value` lies within `k` standard errors of the estimate.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.estimate - value).abs() <= k * self.std_error
    }
}

/// Running means and co-moments of an `N`-vector.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments<const N: usize> {
    count: u64,
    mean: [f64; N],
    comoment: [[f64; N]; N],
}

#[allow(clippy::needless_range_loop)]
impl<const N: usize> Moments<N> {
    pub(crate) fn new() -> Self {
        Moments {
            count: 0,
            mean: [0.0; N],
            comoment: [[0.0; N]; N],
        }
    }

    pub(crate) fn push(&mut self, x: [f64; N]) {
        self.count += 1;
        let n = self.count as f64;
        let mut before = [0.0; N];
        for i in 0..N {
            before[i] = x[i] - self.mean[i];
            self.mean[i] += before[i] / n;
        }
        for i in 0..N {
            let after = x[i] - self.mean[i];
            for j in 0..N {
                self.comoment[j][i] += before[j] * after;
            }
        }
    }

    pub(crate) fn merge(&self, other: &Self) -> Self {
        if other.count == 0 {
            return *self;
        }
        if self.count == 0 {
            return *other;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let mut out = Moments::new();
        out.count = self.count + other.count;
        let mut delta = [0.0; N];
        for i in 0..N {
            delta[i] = other.mean[i] - self.mean[i];
            out.mean[i] = self.mean[i] + delta[i] * (nb / n);
        }
        for i in 0..N {
            for j in 0..N {
                out.comoment[i][j] =
                    self.comoment[i][j] + other.comoment[i][j] + delta[i] * delta[j] * (na * nb / n);
            }
        }
        out
    }

    pub(crate) fn count(&self) -> u64 {
        self.count
    }

    pub(crate) fn mean(&self, i: usize) -> f64 {
        self.mean[i]
    }

    /// Sample covariance; infinite with fewer than two observations.
    pub(crate) fn covariance(&self, i: usize, j: usize) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        self.comoment[i][j] / (self.count - 1) as f64
    }

    /// Standard error of `Σ gᵢ mean(i)` by the delta method.
    pub(crate) fn linear_std_error(&self, g: [f64; N]) -> f64 {
        if self.count < 2 {
            return f64::INFINITY;
        }
        let mut var = 0.0;
        for i in 0..N {
            for j in 0..N {
                var += g[i] * g[j] * self.covariance(i, j);
            }
        }
        (var.max(0.0) / self.count as f64).sqrt()
    }
}

/// Runs `path` once per path and returns the merged moments.
pub(crate) fn simulate<const N: usize, F>(config: &SimConfig, path: F) -> Result<Moments<N>>
where
    F: Fn(&mut ChaCha8Rng) -> [f64; N] + Sync,
{
    config.validate()?;
    let base = ChaCha8Rng::seed_from_u64(config.seed);
    let n_paths = config.n_paths;
    let n_leaves = n_paths.div_ceil(LEAF_PATHS);
    let run_leaf = |leaf: usize| {
        let mut rng = base.clone();
        rng.set_stream(leaf as u64);
        let mut moments = Moments::new();
        let end = ((leaf + 1) * LEAF_PATHS).min(n_paths);
        for _ in leaf * LEAF_PATHS..end {
            moments.push(path(&mut rng));
        }
        moments
    };
    let leaves: Vec<Moments<N>> = match config.execution {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n_leaves)
                .into_par_iter()
                .with_min_len(config.block_size.div_ceil(LEAF_PATHS))
                .map(run_leaf)
                .collect()
        }
        _ => (0..n_leaves).map(run_leaf).collect(),
    };
    Ok(tree_reduce(leaves))
}

fn tree_reduce<const N: usize>(mut level: Vec<Moments<N>>) -> Moments<N> {
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| match pair {
                [a, b] => a.merge(b),
                [a] => *a,
                _ => unreachable!(),
            })
            .collect();
    }
    level.pop().unwrap_or_else(Moments::new)
}

//! Deterministic replication runner.
//!
//! Replication `r` draws its configuration and plays its game on ChaCha
//! stream `r` of the master seed, so results depend only on
//! `(master_seed, r)`. Outcomes are collected in replication order and every
//! reduction runs sequentially over that order, which keeps aggregates
//! bit-identical for any worker count.

use thiserror::Error;

use crate::analysis::{AnalysisError, ReplicationStats};
use crate::engine::{run_with_rng, ProjectConfig, SeedPolicy, SimRng, SimulationOutcome};

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[cfg(feature = "parallel")]
    #[error("failed to start worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Fans independent work items out over a fixed number of workers.
pub struct Runner {
    workers: usize,
    #[cfg(feature = "parallel")]
    pool: Option<rayon::ThreadPool>,
}

impl Runner {
    pub fn new(workers: usize) -> Result<Self, RunnerError> {
        if workers == 0 {
            return Err(RunnerError::NoWorkers);
        }
        #[cfg(feature = "parallel")]
        {
            let pool = if workers > 1 {
                Some(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
            } else {
                None
            };
            Ok(Self { workers, pool })
        }
        #[cfg(not(feature = "parallel"))]
        Ok(Self { workers })
    }

    pub fn sequential() -> Self {
        Self::new(1).expect("one worker is always valid")
    }

    pub fn workers(&self) -> usize {
        self.workers
    }

    /// `f(0..n)` with results in index order.
    pub fn map_indexed<T, F>(&self, n: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if let Some(pool) = &self.pool {
            use rayon::prelude::*;
            return pool.install(|| (0..n).into_par_iter().map(&f).collect());
        }
        (0..n).map(f).collect()
    }
}

/// Runs `n_reps` replications, each sampling its own configuration.
pub fn replicate<F, E>(runner: &Runner, sampler: F, master_seed: u64, n_reps: u64) -> Result<Vec<SimulationOutcome>, E>
where
    F: Fn(&mut SimRng) -> Result<ProjectConfig, E> + Sync + Send,
    E: Send,
{
    runner
        .map_indexed(n_reps, |r| {
            let mut rng = SeedPolicy::new(master_seed, r).rng();
            let config = sampler(&mut rng)?;
            Ok(run_with_rng(&config, &mut rng))
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Error)]
pub enum ReplicationError<E> {
    #[error("configuration sampling failed: {0}")]
    Sampler(E),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

pub fn run_replications<F, E>(
    runner: &Runner,
    sampler: F,
    master_seed: u64,
    n_reps: u64,
) -> Result<ReplicationStats, ReplicationError<E>>
where
    F: Fn(&mut SimRng) -> Result<ProjectConfig, E> + Sync + Send,
    E: Send,
{
    let outcomes = replicate(runner, sampler, master_seed, n_reps).map_err(ReplicationError::Sampler)?;
    Ok(ReplicationStats::from_outcomes(&outcomes)?)
}

/// Seed for sub-experiment `index` of a master seed (splitmix64 finalizer).
pub fn derive_seed(master_seed: u64, index: u64) -> u64 {
    let mut z = master_seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

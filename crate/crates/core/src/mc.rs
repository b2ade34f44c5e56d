//! Reproducible, batch-parallel Monte Carlo plumbing.
//!
//! Trial `i` lives in batch `i / batch`. Each batch draws from its own
//! ChaCha8 stream (`seed_from_u64(master_seed)` with the batch index as
//! stream id), so estimates depend on `(trials, master_seed, batch)` only
//! and never on how rayon schedules the batches.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Stream = ChaCha8Rng;

pub const DEFAULT_BATCH: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McPlan {
    pub trials: u64,
    pub master_seed: u64,
    pub batch: u64,
}

impl McPlan {
    pub fn new(trials: u64, master_seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidPlan("trials must be at least 1".into()));
        }
        Ok(McPlan { trials, master_seed, batch: trials.min(DEFAULT_BATCH) })
    }

    pub fn with_batch(self, batch: u64) -> Result<Self> {
        if batch == 0 || batch > self.trials {
            return Err(Error::InvalidPlan(format!(
                "batch must lie in 1..={}, got {batch}",
                self.trials
            )));
        }
        Ok(McPlan { batch, ..self })
    }

    /// Same seed and batch size, different trial count (batch clamped).
    pub fn with_trials(self, trials: u64) -> Result<Self> {
        let base = McPlan::new(trials, self.master_seed)?;
        Ok(McPlan { batch: self.batch.min(trials), ..base })
    }

    /// Child plan with a seed derived from `salt`; used to decorrelate
    /// estimators that must not share draws.
    pub fn salted(self, salt: u64) -> Self {
        McPlan { master_seed: splitmix64(self.master_seed ^ splitmix64(salt)), ..self }
    }

    pub fn n_batches(&self) -> u64 {
        self.trials.div_ceil(self.batch)
    }

    pub fn batch_len(&self, b: u64) -> u64 {
        let start = b * self.batch;
        self.batch.min(self.trials - start)
    }

    pub fn stream(&self, b: u64) -> Stream {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(b);
        rng
    }

    /// Runs `f(stream, batch_len, batch_index)` for every batch in parallel
    /// and returns the results ordered by batch index.
    pub fn map_batches<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&mut Stream, u64, u64) -> T + Sync,
    {
        (0..self.n_batches())
            .into_par_iter()
            .map(|b| {
                let mut rng = self.stream(b);
                f(&mut rng, self.batch_len(b), b)
            })
            .collect()
    }

    /// Runs `f` on every batch and combines the results with `merge`.
    ///
    /// Memory stays bounded by the number of worker threads. The merge
    /// order is up to rayon, so `merge` must be exactly associative and
    /// commutative (integer sums are; float sums are not).
    pub fn fold_batches<T, F, I, M>(&self, identity: I, f: F, merge: M) -> T
    where
        T: Send,
        F: Fn(&mut Stream, u64, u64) -> T + Sync,
        I: Fn() -> T + Sync + Send,
        M: Fn(T, T) -> T + Sync + Send,
    {
        (0..self.n_batches())
            .into_par_iter()
            .map(|b| {
                let mut rng = self.stream(b);
                f(&mut rng, self.batch_len(b), b)
            })
            .reduce(&identity, &merge)
    }

    /// Number of trials for which `event` fires.
    pub fn count<F>(&self, event: F) -> u64
    where
        F: Fn(&mut Stream) -> bool + Sync,
    {
        self.map_batches(|rng, len, _| (0..len).filter(|_| event(rng)).count() as u64)
            .into_iter()
            .sum()
    }

    /// Fraction of trials for which `event` fires.
    pub fn probability<F>(&self, event: F) -> f64
    where
        F: Fn(&mut Stream) -> bool + Sync,
    {
        self.count(event) as f64 / self.trials as f64
    }
}

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One draw of a Rayleigh-fading power gain: exponential with the given mean.
pub fn sample_exp_gain<R: Rng + ?Sized>(mean_gain: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    // The ziggurat can return exactly zero; gains must stay positive.
    mean_gain * e.max(f64::MIN_POSITIVE)
}

//! Deterministic parallel Monte Carlo.
//!
//! Path `i` always draws from [`path_stream`]`(seed, i)`. Paths are grouped in
//! fixed chunks of [`CHUNK`] indices regardless of the worker count, and the
//! per-chunk accumulators are merged in chunk order, so every result is a
//! pure function of the configuration and the seed.

mod checks;
mod fit;
mod persistence;

pub use checks::{
    ab_identity, maximal_inequality_report, partition_check, AbIdentity, Comparison, MaximalReport,
    MaximalRow, PartitionReport,
};
pub use fit::{fit_exponent, ExponentFit, MIN_EVENTS};
pub use persistence::{
    argmax_law, estimate_mean_abs_s, estimate_persistence, marginal_identity, mean_abs_curve,
    survival_curve, ArgmaxLaw, MarginalIdentity, SurvivalCurve,
};

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::exact::{Order, Strictness};
pub use crate::rng::path_stream;

/// Paths per work item.
pub const CHUNK: u64 = 1024;

/// Default cap on `paths * n`.
pub const DEFAULT_BUDGET: u64 = 400_000_000_000;

/// Allowed multiple of the standard error in statistical checks.
pub const SE_ALLOWANCE: f64 = 4.0;

/// One persistence (or moment) simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub spec: DistributionSpec,
    pub order: Order,
    pub strictness: Strictness,
    /// Level `y >= 0` that the running maximum must stay below.
    pub threshold: f64,
    pub n: usize,
    pub paths: u64,
    pub seed: u64,
    pub workers: usize,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

impl RunConfig {
    pub fn new(spec: DistributionSpec, order: Order, n: usize) -> Self {
        Self {
            spec,
            order,
            strictness: Strictness::Strict,
            threshold: 0.0,
            n,
            paths: 100_000,
            seed: 42,
            workers: 1,
            budget: DEFAULT_BUDGET,
        }
    }

    pub fn paths(mut self, paths: u64) -> Self {
        self.paths = paths;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn threshold(mut self, y: f64) -> Self {
        self.threshold = y;
        self
    }

    pub fn strictness(mut self, strictness: Strictness) -> Self {
        self.strictness = strictness;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths == 0 {
            return Err(Error::InvalidConfig("paths must be >= 1".into()));
        }
        if !(self.threshold.is_finite() && self.threshold >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold {} must be >= 0",
                self.threshold
            )));
        }
        if self.workers == 0 {
            return Err(Error::InvalidConfig("workers must be >= 1".into()));
        }
        check_budget(self.paths, self.n, self.budget)
    }

    /// Digest of everything that determines the payload (not `workers`).
    pub fn digest(&self, kind: &str) -> String {
        config_digest(
            kind,
            &self.spec,
            self.order,
            self.strictness,
            self.threshold,
            self.n,
            self.paths,
            self.seed,
        )
    }
}

pub(crate) fn check_budget(paths: u64, n: usize, budget: u64) -> Result<()> {
    let requested = paths as u128 * n.max(1) as u128;
    if requested > budget as u128 {
        return Err(Error::BudgetExceeded {
            requested,
            budget: budget as u128,
        });
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn config_digest(
    kind: &str,
    spec: &DistributionSpec,
    order: Order,
    strictness: Strictness,
    threshold: f64,
    n: usize,
    paths: u64,
    seed: u64,
) -> String {
    let canon = format!("{kind}|{spec}|{order}|{strictness}|{threshold:?}|{n}|{paths}|{seed}");
    let hash = Sha256::digest(canon.as_bytes());
    hex::encode(&hash[..8])
}

/// A Monte Carlo point estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub paths: u64,
    pub seed: u64,
    pub n: usize,
    pub config_digest: String,
}

impl Estimate {
    /// Bernoulli proportion `hits / paths` with `sqrt(p(1-p)/paths)`.
    pub fn bernoulli(hits: u64, paths: u64, seed: u64, n: usize, config_digest: String) -> Self {
        let p = hits as f64 / paths as f64;
        Self {
            value: p,
            stderr: (p * (1.0 - p) / paths as f64).sqrt(),
            paths,
            seed,
            n,
            config_digest,
        }
    }

    pub fn from_moments(w: &Welford, seed: u64, n: usize, config_digest: String) -> Self {
        Self {
            value: w.mean(),
            stderr: w.stderr(),
            paths: w.count(),
            seed,
            n,
            config_digest,
        }
    }

    /// `|self - target| / stderr`, or 0 / inf when the error is zero.
    pub fn z_against(&self, target: f64) -> f64 {
        let diff = (self.value - target).abs();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Streaming mean and variance, mergeable across chunks.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let total = self.count + other.count;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / total as f64;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / total as f64;
        self.count = total;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Runs `work` over fixed path-index chunks and returns the chunk results in
/// index order.
pub(crate) fn run_chunks<T, F>(paths: u64, workers: usize, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync + Send,
{
    let chunks: Vec<Range<u64>> = (0..paths.div_ceil(CHUNK))
        .map(|c| c * CHUNK..((c + 1) * CHUNK).min(paths))
        .collect();
    if workers <= 1 {
        return chunks.into_iter().map(work).collect();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("failed to build worker pool")
        .install(|| chunks.into_par_iter().map(&work).collect())
}

/// Running partial sum (order 1) or iterated sum (order 2).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Walker {
    pub s: f64,
    pub v: f64,
}

impl Walker {
    #[inline]
    pub fn step(&mut self, x: f64, order: Order) -> f64 {
        self.s += x;
        self.v += self.s;
        match order {
            Order::One => self.s,
            Order::Two => self.v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welford_merge_matches_sequential() {
        let xs: Vec<f64> = (0..1000)
            .map(|i| ((i * 37) % 101) as f64 * 0.5 - 7.0)
            .collect();
        let mut whole = Welford::default();
        xs.iter().for_each(|&x| whole.push(x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        a.merge(&b);
        assert_eq!(a.count(), whole.count());
        assert!((a.mean() - whole.mean()).abs() < 1e-12);
        assert!((a.variance() - whole.variance()).abs() < 1e-9);
    }

    #[test]
    fn chunks_cover_paths_in_order() {
        let ranges = run_chunks(2500, 3, |r| r);
        assert_eq!(ranges, vec![0..1024, 1024..2048, 2048..2500]);
    }

    #[test]
    fn config_validation() {
        let spec = DistributionSpec::rademacher();
        assert!(RunConfig::new(spec, Order::One, 4)
            .paths(0)
            .validate()
            .is_err());
        assert!(RunConfig::new(spec, Order::One, 4)
            .threshold(-1.0)
            .validate()
            .is_err());
        assert!(RunConfig::new(spec, Order::One, 4)
            .workers(0)
            .validate()
            .is_err());
        let big = RunConfig::new(spec, Order::One, 1 << 30).paths(1 << 40);
        assert!(matches!(big.validate(), Err(Error::BudgetExceeded { .. })));
        assert!(RunConfig::new(spec, Order::One, 4).validate().is_ok());
    }

    #[test]
    fn digest_ignores_workers() {
        let spec = DistributionSpec::rademacher();
        let a = RunConfig::new(spec, Order::Two, 8).workers(1);
        let b = a.clone().workers(8);
        assert_eq!(a.digest("p"), b.digest("p"));
        assert_ne!(a.digest("p"), a.clone().seed(1).digest("p"));
    }
}

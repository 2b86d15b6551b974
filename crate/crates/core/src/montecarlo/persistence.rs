use serde::{Deserialize, Serialize};

use super::{run_chunks, Estimate, RunConfig, Walker, Welford, SE_ALLOWANCE};
use crate::error::{Error, Result};
use crate::exact::{double_factorial_ratio, order1_table, to_f64, Order, Strictness};
use crate::rng::{derive_seed, path_stream};
use crate::walks::{first_argmax, y_left_of};

/// Survival counts for every horizon `0..=n_max` from a single pass.
///
/// Each path is simulated until its weak first passage (or `n_max`), so
/// estimates for different `n` share the same path set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub config: RunConfig,
    /// `strict_alive[n]` paths with `max_{k<=n} T_k < y`.
    pub strict_alive: Vec<u64>,
    /// `weak_alive[n]` paths with `max_{k<=n} T_k <= y`.
    pub weak_alive: Vec<u64>,
    /// Paths whose maximum touched `y` exactly before leaving.
    pub ties: u64,
    /// Total increments drawn.
    pub steps: u64,
}

impl SurvivalCurve {
    pub fn n_max(&self) -> usize {
        self.strict_alive.len() - 1
    }

    pub fn alive(&self, strictness: Strictness, n: usize) -> u64 {
        match strictness {
            Strictness::Strict => self.strict_alive[n],
            Strictness::Weak => self.weak_alive[n],
        }
    }

    /// Estimate at horizon `n <= n_max`; equal to a dedicated run at `n`.
    pub fn estimate(&self, strictness: Strictness, n: usize) -> Result<Estimate> {
        if n > self.n_max() {
            return Err(Error::IndexOutOfRange {
                index: n,
                lo: 0,
                hi: self.n_max(),
            });
        }
        let mut cfg = self.config.clone();
        cfg.n = n;
        cfg.strictness = strictness;
        Ok(Estimate::bernoulli(
            self.alive(strictness, n),
            cfg.paths,
            cfg.seed,
            n,
            cfg.digest("persistence"),
        ))
    }
}

struct ExitTally {
    strict: Vec<u64>,
    weak: Vec<u64>,
    ties: u64,
    steps: u64,
}

/// Simulates survival for all horizons up to `cfg.n`.
pub fn survival_curve(cfg: &RunConfig) -> Result<SurvivalCurve> {
    cfg.validate()?;
    let n = cfg.n;
    let (spec, order, y) = (cfg.spec, cfg.order, cfg.threshold);
    let tallies = run_chunks(cfg.paths, cfg.workers, |range| {
        // exits[k] = paths leaving at step k; index n + 1 = survived.
        let mut t = ExitTally {
            strict: vec![0; n + 2],
            weak: vec![0; n + 2],
            ties: 0,
            steps: 0,
        };
        for i in range {
            let mut rng = path_stream(cfg.seed, i);
            let mut w = Walker::default();
            let mut strict_exit = n + 1;
            let mut weak_exit = n + 1;
            for k in 1..=n {
                let v = w.step(spec.sample(&mut rng), order);
                if strict_exit > n && v >= y {
                    strict_exit = k;
                }
                if v > y {
                    weak_exit = k;
                    break;
                }
            }
            t.steps += weak_exit.min(n) as u64;
            t.strict[strict_exit] += 1;
            t.weak[weak_exit] += 1;
            if strict_exit != weak_exit {
                t.ties += 1;
            }
        }
        t
    });
    let mut strict_exits = vec![0u64; n + 2];
    let mut weak_exits = vec![0u64; n + 2];
    let (mut ties, mut steps) = (0, 0);
    for t in &tallies {
        strict_exits
            .iter_mut()
            .zip(&t.strict)
            .for_each(|(a, b)| *a += b);
        weak_exits
            .iter_mut()
            .zip(&t.weak)
            .for_each(|(a, b)| *a += b);
        ties += t.ties;
        steps += t.steps;
    }
    let alive = |exits: &[u64]| {
        let mut left = cfg.paths;
        let mut out = Vec::with_capacity(n + 1);
        out.push(left);
        for &e in &exits[1..=n] {
            left -= e;
            out.push(left);
        }
        out
    };
    Ok(SurvivalCurve {
        config: cfg.clone(),
        strict_alive: alive(&strict_exits),
        weak_alive: alive(&weak_exits),
        ties,
        steps,
    })
}

/// Fraction of paths with `max_{1<=k<=n} T_k < y` (strict) or `<= y` (weak).
pub fn estimate_persistence(cfg: &RunConfig) -> Result<Estimate> {
    survival_curve(cfg)?.estimate(cfg.strictness, cfg.n)
}

/// `E|S_n|` for each requested `n`, from one set of paths of length
/// `max(ns)`. Order and strictness of `cfg` are ignored.
pub fn mean_abs_curve(cfg: &RunConfig, ns: &[usize]) -> Result<Vec<Estimate>> {
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let mut base = cfg.clone();
    base.n = n_max;
    base.validate()?;
    let spec = cfg.spec;
    let mut wanted = vec![usize::MAX; n_max + 1];
    for (slot, &n) in ns.iter().enumerate() {
        wanted[n] = slot;
    }
    let parts = run_chunks(cfg.paths, cfg.workers, |range| {
        let mut acc = vec![Welford::default(); ns.len()];
        for i in range {
            let mut rng = path_stream(cfg.seed, i);
            let mut s = 0.0;
            if wanted[0] != usize::MAX {
                acc[wanted[0]].push(0.0);
            }
            for &slot in &wanted[1..] {
                s += spec.sample(&mut rng);
                if slot != usize::MAX {
                    acc[slot].push(s.abs());
                }
            }
        }
        acc
    });
    let mut total = vec![Welford::default(); ns.len()];
    for part in &parts {
        total.iter_mut().zip(part).for_each(|(a, b)| a.merge(b));
    }
    Ok(ns
        .iter()
        .map(|&n| {
            let mut c = cfg.clone();
            c.n = n;
            let w = &total[wanted[n]];
            Estimate::from_moments(w, cfg.seed, n, c.digest("mean-abs"))
        })
        .collect())
}

/// Sample mean of `|S_n|`.
pub fn estimate_mean_abs_s(cfg: &RunConfig) -> Result<Estimate> {
    Ok(mean_abs_curve(cfg, &[cfg.n])?.remove(0))
}

/// Empirical law of the first argmax of `(S_0, ..., S_n)` against
/// `p_k pbar_{n-k}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxLaw {
    pub n: usize,
    pub paths: u64,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
    pub reference: Vec<f64>,
    pub max_abs_deviation: f64,
    /// Largest `|freq - ref| / se` over `k`.
    pub max_z: f64,
}

impl ArgmaxLaw {
    pub fn consistent(&self) -> bool {
        self.max_z <= SE_ALLOWANCE + (self.n as f64 + 1.0).ln()
    }
}

pub fn argmax_law(cfg: &RunConfig) -> Result<ArgmaxLaw> {
    let spec = cfg.spec;
    if !spec.is_symmetric() {
        return Err(Error::NotSymmetric(spec.to_string()));
    }
    cfg.validate()?;
    let n = cfg.n;
    let (strict, weak): (Vec<f64>, Vec<f64>) = if spec.has_density() {
        let p: Vec<f64> = (0..=n)
            .map(|k| to_f64(&double_factorial_ratio(k)))
            .collect();
        (p.clone(), p)
    } else {
        let table = order1_table(n)?;
        (
            (0..=n)
                .map(|k| table.prob_f64(Strictness::Strict, k))
                .collect(),
            (0..=n)
                .map(|k| table.prob_f64(Strictness::Weak, k))
                .collect(),
        )
    };
    let reference: Vec<f64> = (0..=n).map(|k| strict[k] * weak[n - k]).collect();
    let parts = run_chunks(cfg.paths, cfg.workers, |range| {
        let mut counts = vec![0u64; n + 1];
        let mut s = vec![0.0; n + 1];
        for i in range {
            let mut rng = path_stream(cfg.seed, i);
            for k in 1..=n {
                s[k] = s[k - 1] + spec.sample(&mut rng);
            }
            counts[first_argmax(&s).expect("non-empty")] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; n + 1];
    for part in &parts {
        counts.iter_mut().zip(part).for_each(|(a, b)| *a += b);
    }
    let total = cfg.paths as f64;
    let frequencies: Vec<f64> = counts.iter().map(|&c| c as f64 / total).collect();
    let mut max_abs_deviation = 0.0f64;
    let mut max_z = 0.0f64;
    for (f, r) in frequencies.iter().zip(&reference) {
        let dev = (f - r).abs();
        max_abs_deviation = max_abs_deviation.max(dev);
        let se = (r * (1.0 - r) / total).sqrt();
        if se > 0.0 {
            max_z = max_z.max(dev / se);
        } else if dev > 0.0 {
            max_z = f64::INFINITY;
        }
    }
    Ok(ArgmaxLaw {
        n,
        paths: cfg.paths,
        counts,
        frequencies,
        reference,
        max_abs_deviation,
        max_z,
    })
}

/// `P(Y_{k,2} < 0)` next to an independent estimate of `p_{k-1}^(2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalIdentity {
    pub k: usize,
    pub y_negative: Estimate,
    pub persistence: Estimate,
    pub z: f64,
}

pub fn marginal_identity(cfg: &RunConfig, k: usize) -> Result<MarginalIdentity> {
    if k < 2 || k > cfg.n {
        return Err(Error::IndexOutOfRange {
            index: k,
            lo: 2,
            hi: cfg.n,
        });
    }
    cfg.validate()?;
    let spec = cfg.spec;
    let parts = run_chunks(cfg.paths, cfg.workers, |range| {
        let mut xs = vec![0.0; k];
        let mut hits = 0u64;
        for i in range {
            let mut rng = path_stream(cfg.seed, i);
            xs.iter_mut().for_each(|x| *x = spec.sample(&mut rng));
            if y_left_of(&xs) < 0.0 {
                hits += 1;
            }
        }
        hits
    });
    let hits = parts.iter().sum();
    let mut left_cfg = cfg.clone();
    left_cfg.n = k;
    let y_negative = Estimate::bernoulli(hits, cfg.paths, cfg.seed, k, left_cfg.digest("y-left"));
    let right_cfg = RunConfig {
        order: Order::Two,
        strictness: Strictness::Strict,
        threshold: 0.0,
        n: k - 1,
        seed: derive_seed(cfg.seed, 0x6d61_7267),
        ..cfg.clone()
    };
    let persistence = estimate_persistence(&right_cfg)?;
    let joint = (y_negative.stderr.powi(2) + persistence.stderr.powi(2)).sqrt();
    let diff = (y_negative.value - persistence.value).abs();
    let z = if joint > 0.0 {
        diff / joint
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MarginalIdentity {
        k,
        y_negative,
        persistence,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::DistributionSpec;

    fn rad(order: Order, n: usize) -> RunConfig {
        RunConfig::new(DistributionSpec::rademacher(), order, n)
    }

    #[test]
    fn rademacher_order2_n3() {
        let est = estimate_persistence(&rad(Order::Two, 3).paths(1_000_000)).unwrap();
        assert!(est.z_against(0.375) < 3.0, "{est:?}");
    }

    #[test]
    fn gaussian_order1_n4() {
        let cfg = RunConfig::new(DistributionSpec::gaussian(1.0).unwrap(), Order::One, 4)
            .paths(1_000_000);
        let est = estimate_persistence(&cfg).unwrap();
        assert!(est.z_against(35.0 / 128.0) < 3.0, "{est:?}");
    }

    #[test]
    fn single_step_is_half() {
        let cfg =
            RunConfig::new(DistributionSpec::gaussian(1.0).unwrap(), Order::One, 1).paths(200_000);
        assert!(estimate_persistence(&cfg).unwrap().z_against(0.5) < 3.0);
    }

    #[test]
    fn curve_matches_dedicated_runs() {
        let cfg = rad(Order::Two, 40).paths(5_000).seed(9);
        let curve = survival_curve(&cfg).unwrap();
        for n in [1, 7, 40] {
            let mut c = cfg.clone();
            c.n = n;
            assert_eq!(
                curve.estimate(Strictness::Strict, n).unwrap(),
                estimate_persistence(&c).unwrap()
            );
        }
    }

    #[test]
    fn workers_do_not_change_results() {
        let cfg = rad(Order::Two, 64).paths(10_000).seed(3);
        let one = survival_curve(&cfg).unwrap();
        let four = survival_curve(&cfg.clone().workers(4)).unwrap();
        assert_eq!(one.strict_alive, four.strict_alive);
        assert_eq!(one.weak_alive, four.weak_alive);
    }

    #[test]
    fn strict_below_weak_and_threshold_monotone() {
        let cfg = rad(Order::Two, 30).paths(20_000);
        let lo = survival_curve(&cfg).unwrap();
        let hi = survival_curve(&cfg.clone().threshold(2.0)).unwrap();
        for n in 0..=30 {
            assert!(lo.strict_alive[n] <= lo.weak_alive[n]);
            assert!(lo.weak_alive[n] <= hi.strict_alive[n]);
        }
        assert!(lo.ties > 0);
    }

    #[test]
    fn mean_abs_examples() {
        let r = estimate_mean_abs_s(&rad(Order::One, 3).paths(400_000)).unwrap();
        assert!(r.z_against(1.5) < 3.0);
        let g =
            RunConfig::new(DistributionSpec::gaussian(1.0).unwrap(), Order::One, 1).paths(400_000);
        let g = estimate_mean_abs_s(&g).unwrap();
        assert!(g.z_against((2.0 / std::f64::consts::PI).sqrt()) < 3.0);
        let zero = estimate_mean_abs_s(&rad(Order::One, 0).paths(10)).unwrap();
        assert_eq!((zero.value, zero.stderr), (0.0, 0.0));
    }

    #[test]
    fn argmax_references() {
        let law = argmax_law(&rad(Order::One, 2).paths(100_000)).unwrap();
        assert_eq!(law.reference, vec![0.5, 0.25, 0.25]);
        assert_eq!(law.counts.iter().sum::<u64>(), 100_000);
        assert!(law.consistent());
        let g =
            RunConfig::new(DistributionSpec::gaussian(1.0).unwrap(), Order::One, 1).paths(10_000);
        assert_eq!(argmax_law(&g).unwrap().reference, vec![0.5, 0.5]);
        let p = RunConfig::new(
            DistributionSpec::shifted_pareto(1.5).unwrap(),
            Order::One,
            3,
        );
        assert!(matches!(argmax_law(&p), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn marginal_examples() {
        let m = marginal_identity(&rad(Order::Two, 4).paths(200_000), 4).unwrap();
        assert!(m.z < 4.0);
        assert!(m.persistence.z_against(0.375) < 4.0);
        let g =
            RunConfig::new(DistributionSpec::gaussian(1.0).unwrap(), Order::Two, 8).paths(200_000);
        assert!(marginal_identity(&g, 8).unwrap().z < 4.0);
        assert!(marginal_identity(&g, 1).is_err());
        assert!(marginal_identity(&g, 9).is_err());
    }
}

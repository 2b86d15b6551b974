use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    check_budget, config_digest, run_chunks, Estimate, Welford, DEFAULT_BUDGET, SE_ALLOWANCE,
};
use crate::distributions::DistributionSpec;
use crate::error::Result;
use crate::exact::{Order, Strictness};
use crate::rng::path_stream;
use crate::walks::{
    diagnostics, indicator_sum, iterated_sums, k_intervals, shifted_argmax, y_left, y_right, Path,
};

/// One empirical `lhs <= rhs` comparison, judged on paired differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs - rhs`.
    pub stderr: f64,
    /// `lhs - rhs > 4 stderr`.
    pub flagged: bool,
}

impl Comparison {
    fn from_pairs(name: &str, lhs: &Welford, rhs: &Welford, diff: &Welford) -> Self {
        let (l, r) = (lhs.mean(), rhs.mean());
        let stderr = diff.stderr();
        Self {
            name: name.to_string(),
            lhs: l,
            rhs: r,
            stderr,
            flagged: l - r > SE_ALLOWANCE * stderr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalRow {
    pub t: f64,
    /// `P(max S_k >= t) <= 2 P(S_n >= t)`, symmetric laws only.
    pub ottaviani: Option<Comparison>,
    /// `P(max |S_k| >= t) <= 9 P(|S_n| >= t / 30)`.
    pub montgomery_smith: Comparison,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalReport {
    pub spec: DistributionSpec,
    pub n: usize,
    pub paths: u64,
    pub seed: u64,
    pub rows: Vec<MaximalRow>,
    pub moments: Vec<Comparison>,
}

impl MaximalReport {
    pub fn flagged(&self) -> usize {
        let rows = self
            .rows
            .iter()
            .flat_map(|r| r.ottaviani.iter().chain([&r.montgomery_smith]));
        rows.chain(&self.moments).filter(|c| c.flagged).count()
    }
}

#[derive(Default, Clone)]
struct Triple {
    lhs: Welford,
    rhs: Welford,
    diff: Welford,
}

impl Triple {
    fn push(&mut self, l: f64, r: f64) {
        self.lhs.push(l);
        self.rhs.push(r);
        self.diff.push(l - r);
    }

    fn merge(&mut self, o: &Triple) {
        self.lhs.merge(&o.lhs);
        self.rhs.merge(&o.rhs);
        self.diff.merge(&o.diff);
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Empirical maximal inequalities for `S_1, ..., S_n` on a grid of levels.
pub fn maximal_inequality_report(
    spec: &DistributionSpec,
    n: usize,
    ts: &[f64],
    paths: u64,
    seed: u64,
    workers: usize,
) -> Result<MaximalReport> {
    check_budget(paths, n, DEFAULT_BUDGET)?;
    let spec = *spec;
    let symmetric = spec.is_symmetric();
    // per t: [ottaviani, montgomery-smith]; then the two moment checks
    let parts = run_chunks(paths, workers, |range| {
        let mut acc = vec![Triple::default(); 2 * ts.len() + 2];
        for i in range {
            let mut rng = path_stream(seed, i);
            let (mut s, mut max, mut max_abs) = (0.0f64, f64::NEG_INFINITY, 0.0f64);
            for _ in 0..n {
                s += spec.sample(&mut rng);
                max = max.max(s);
                max_abs = max_abs.max(s.abs());
            }
            for (j, &t) in ts.iter().enumerate() {
                acc[2 * j].push(ind(max >= t), 2.0 * ind(s >= t));
                acc[2 * j + 1].push(ind(max_abs >= t), 9.0 * ind(s.abs() >= t / 30.0));
            }
            let m = ts.len() * 2;
            acc[m].push(max, 270.0 * s.abs());
            acc[m + 1].push(max, s.abs());
        }
        acc
    });
    let mut total = vec![Triple::default(); 2 * ts.len() + 2];
    for part in &parts {
        total.iter_mut().zip(part).for_each(|(a, b)| a.merge(b));
    }
    let cmp = |name: &str, t: &Triple| Comparison::from_pairs(name, &t.lhs, &t.rhs, &t.diff);
    let rows = ts
        .iter()
        .enumerate()
        .map(|(j, &t)| MaximalRow {
            t,
            ottaviani: symmetric.then(|| cmp("ottaviani", &total[2 * j])),
            montgomery_smith: cmp("montgomery-smith", &total[2 * j + 1]),
        })
        .collect();
    let m = ts.len() * 2;
    let mut moments = vec![cmp("mean-max-270", &total[m])];
    if symmetric {
        moments.push(cmp("mean-max-symmetric", &total[m + 1]));
    }
    Ok(MaximalReport {
        spec,
        n,
        paths,
        seed,
        rows,
        moments,
    })
}

/// `E[A_n - B_n]` against `2 E[max_{1<=k<=n} S_k]` on the same paths of
/// length `n + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbIdentity {
    pub n: usize,
    pub a_minus_b: Estimate,
    pub twice_max: Estimate,
    /// Mean of the paired difference, `A_n - B_n - 2 max S_k`.
    pub difference: Estimate,
    pub z: f64,
}

impl AbIdentity {
    pub fn holds(&self) -> bool {
        self.z <= SE_ALLOWANCE
    }
}

pub fn ab_identity(
    spec: &DistributionSpec,
    n: usize,
    paths: u64,
    seed: u64,
    workers: usize,
) -> Result<AbIdentity> {
    check_budget(paths, n + 1, DEFAULT_BUDGET)?;
    let spec = *spec;
    let parts = run_chunks(paths, workers, |range| {
        let mut t = Triple::default();
        for i in range {
            let mut rng = path_stream(seed, i);
            let mut s = spec.sample(&mut rng);
            let mut max_s = s;
            let mut max_neg_next = f64::NEG_INFINITY;
            for k in 1..=n {
                s += spec.sample(&mut rng);
                max_neg_next = max_neg_next.max(-s);
                if k < n {
                    max_s = max_s.max(s);
                }
            }
            t.push(max_neg_next + max_s, 2.0 * max_s);
        }
        t
    });
    let mut total = Triple::default();
    parts.iter().for_each(|p| total.merge(p));
    let est = |w: &Welford, kind: &str| {
        let digest = config_digest(
            kind,
            &spec,
            Order::One,
            Strictness::Strict,
            0.0,
            n,
            paths,
            seed,
        );
        Estimate::from_moments(w, seed, n, digest)
    };
    let difference = est(&total.diff, "ab-diff");
    let z = difference.z_against(0.0);
    Ok(AbIdentity {
        n,
        a_minus_b: est(&total.lhs, "ab-lhs"),
        twice_max: est(&total.rhs, "ab-rhs"),
        difference,
        z,
    })
}

/// Interval-partition cross-check over random paths and shifts.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PartitionReport {
    pub paths: u64,
    pub pairs: u64,
    /// `(path, t)` pairs where the brute-force argmax is not the unique
    /// interval containing `t`.
    pub mismatches: u64,
    pub sum_indicator_violations: u64,
    pub lower_diff_violations: u64,
}

impl PartitionReport {
    pub fn clean(&self) -> bool {
        self.mismatches == 0
            && self.sum_indicator_violations == 0
            && self.lower_diff_violations == 0
    }

    fn merge(&mut self, o: &PartitionReport) {
        self.paths += o.paths;
        self.pairs += o.pairs;
        self.mismatches += o.mismatches;
        self.sum_indicator_violations += o.sum_indicator_violations;
        self.lower_diff_violations += o.lower_diff_violations;
    }
}

/// Paths with length uniform in `3..=50`, `shifts` values of `t` each, drawn
/// uniformly over `[min(-S_k) - 1, max(-S_k) + 1]`.
pub fn partition_check(
    spec: &DistributionSpec,
    paths: u64,
    shifts: usize,
    seed: u64,
) -> Result<PartitionReport> {
    let spec = *spec;
    let parts = run_chunks(paths, 1, |range| -> Result<PartitionReport> {
        let mut rep = PartitionReport::default();
        for i in range {
            let mut rng = path_stream(seed, i);
            let n = rng.random_range(3..=50usize);
            let path = Path::new((0..n).map(|_| spec.sample(&mut rng)).collect())?;
            let iterated = iterated_sums(&path)?;
            let s = path.partial_sums();
            let scale = 1.0 + path.increments().iter().map(|x| x.abs()).sum::<f64>() * n as f64;
            let tol = 1e-12 * scale;
            let intervals = k_intervals(&path);
            let neg_lo = s.iter().map(|v| -v).fold(f64::INFINITY, f64::min) - 1.0;
            let neg_hi = s.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max) + 1.0;
            for _ in 0..shifts {
                let t = rng.random_range(neg_lo..neg_hi);
                let brute = shifted_argmax(&iterated, t);
                let mut members = intervals.iter().filter(|iv| iv.contains(t));
                let first = members.next().map(|iv| iv.k);
                if first != Some(brute) || members.next().is_some() {
                    rep.mismatches += 1;
                }
            }
            rep.pairs += shifts as u64;
            rep.paths += 1;

            let d = diagnostics(&path)?;
            let covered: f64 = intervals[1..n]
                .iter()
                .map(|iv| (iv.hi - iv.lo).max(0.0))
                .sum();
            if d.a - d.b + tol < covered || covered + tol < indicator_sum(&path) {
                rep.sum_indicator_violations += 1;
            }
            let x1 = path.x(1);
            let middle = x1 - s[n] + (y_right(&path, 2)? + y_left(&path, n)?).max(0.0);
            let floor = (x1 - s[n]).max(0.0);
            if d.m_upper - d.m_lower + tol < middle || middle + tol < floor {
                rep.lower_diff_violations += 1;
            }
        }
        Ok(rep)
    });
    let mut total = PartitionReport::default();
    for part in parts {
        total.merge(&part?);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rademacher_maximal_n16() {
        let rep = maximal_inequality_report(
            &DistributionSpec::rademacher(),
            16,
            &[0.0, 2.0],
            100_000,
            1,
            1,
        )
        .unwrap();
        assert_eq!(rep.flagged(), 0);
        let zero = &rep.rows[0].montgomery_smith;
        assert!(zero.lhs <= 1.0 && zero.rhs == 9.0);
        assert_eq!(rep.moments.len(), 2);
    }

    #[test]
    fn gaussian_maximal_grid() {
        let ts: Vec<f64> = (1..=6).map(|i| 0.5 * i as f64 * 8.0).collect();
        let rep = maximal_inequality_report(
            &DistributionSpec::gaussian(1.0).unwrap(),
            64,
            &ts,
            50_000,
            2,
            1,
        )
        .unwrap();
        assert_eq!(rep.flagged(), 0);
    }

    #[test]
    fn asymmetric_skips_ottaviani() {
        let rep = maximal_inequality_report(
            &DistributionSpec::shifted_pareto(1.5).unwrap(),
            8,
            &[1.0],
            1000,
            1,
            1,
        )
        .unwrap();
        assert!(rep.rows[0].ottaviani.is_none());
        assert_eq!(rep.moments.len(), 1);
    }

    #[test]
    fn ab_identity_rademacher() {
        let ab = ab_identity(&DistributionSpec::rademacher(), 8, 100_000, 5, 1).unwrap();
        assert!(ab.holds(), "{ab:?}");
        // n = 1: A_1 - B_1 = -S_2 + X_1 = -X_2, mean zero
        let one = ab_identity(&DistributionSpec::rademacher(), 1, 10_000, 5, 1).unwrap();
        assert!(one.holds());
    }

    #[test]
    fn partition_is_clean() {
        for spec in [
            DistributionSpec::rademacher(),
            DistributionSpec::gaussian(1.0).unwrap(),
            DistributionSpec::laplace(1.0).unwrap(),
            DistributionSpec::shifted_pareto(1.5).unwrap(),
        ] {
            let rep = partition_check(&spec, 200, 20, 11).unwrap();
            assert_eq!(rep.pairs, 4000);
            assert!(rep.clean(), "{spec}: {rep:?}");
        }
    }
}

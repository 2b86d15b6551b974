//! Integrated Brownian motion `Y(t) = int_0^t B(s) ds` and its comparison
//! with Gaussian iterated sums.

use std::f64::consts::PI;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::exact::{Order, Strictness};
use crate::montecarlo::{
    check_budget, config_digest, estimate_persistence, run_chunks, Estimate, RunConfig,
    DEFAULT_BUDGET, SE_ALLOWANCE,
};
use crate::rng::{derive_seed, path_stream, Stream};
use crate::special::{gamma_lanczos, gamma_stirling};

/// Lattice indices `k <= m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovPair {
    k: u64,
    m: u64,
}

impl CovPair {
    pub fn new(k: u64, m: u64) -> Result<Self> {
        if k == 0 || m < k {
            return Err(Error::CovOrdering { k, m });
        }
        Ok(Self { k, m })
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn m(&self) -> u64 {
        self.m
    }
}

fn int(v: u64) -> BigInt {
    BigInt::from(v)
}

fn frac(num: BigInt, den: u64) -> BigRational {
    BigRational::new(num, int(den))
}

/// `E[Y(k) Y(m)] = k^2 (3m - k) / 6`.
pub fn cov_ibm(k: u64, m: u64) -> Result<BigRational> {
    let p = CovPair::new(k, m)?;
    Ok(frac(int(p.k) * int(p.k) * (int(3 * p.m) - int(p.k)), 6))
}

/// `E[S_k^(2) S_m^(2)] = k (k + 1) (3m - k + 1) / 6` for unit-variance steps.
pub fn cov_s2(k: u64, m: u64) -> Result<BigRational> {
    let p = CovPair::new(k, m)?;
    Ok(frac(
        int(p.k) * int(p.k + 1) * (int(3 * p.m + 1) - int(p.k)),
        6,
    ))
}

/// `(1 + 1/k)(1 + 1/(2k))`, the variance ratio taking `Y(k)` to `Z(k)`.
pub fn z_scale_sq(k: u64) -> Result<BigRational> {
    CovPair::new(k, k)?;
    Ok(BigRational::new(
        int(k + 1) * int(2 * k + 1),
        int(2 * k * k),
    ))
}

pub fn z_scale(k: u64) -> Result<f64> {
    let k = CovPair::new(k, k)?.k as f64;
    Ok(((1.0 + 1.0 / k) * (1.0 + 1.0 / (2.0 * k))).sqrt())
}

/// `f(m, k)^2` where `f(m, k) = E[S_m^(2) S_k^(2)] / E[Z(m) Z(k)]`.
pub fn cov_ratio_sq(k: u64, m: u64) -> Result<BigRational> {
    let s2 = cov_s2(k, m)?;
    let ibm = cov_ibm(k, m)?;
    Ok(&s2 * &s2 / (z_scale_sq(m)? * z_scale_sq(k)? * &ibm * &ibm))
}

pub fn cov_ratio(k: u64, m: u64) -> Result<f64> {
    Ok(crate::exact::to_f64(&cov_ratio_sq(k, m)?).sqrt())
}

/// Outcome of the exact covariance checks on `1 <= k <= m <= max`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlepianReport {
    pub max: u64,
    pub pairs: u64,
    /// `k` with `E[(S_k^(2))^2] != E[Z(k)^2]` or `f(k, k) != 1`.
    pub diagonal_failures: Vec<u64>,
    /// Pairs `k < m` with `f(m, k) < 1`.
    pub below_one: Vec<(u64, u64)>,
    /// Pairs with `f(m + 1, k) < f(m, k)`.
    pub decreasing: Vec<(u64, u64)>,
}

impl SlepianReport {
    pub fn holds(&self) -> bool {
        self.diagonal_failures.is_empty() && self.below_one.is_empty() && self.decreasing.is_empty()
    }
}

pub fn slepian_claims(max: u64) -> Result<SlepianReport> {
    let one = BigRational::one();
    let mut rep = SlepianReport {
        max,
        ..Default::default()
    };
    for k in 1..=max {
        let var_s2 = frac(int(k) * int(k + 1) * int(2 * k + 1), 6);
        let var_z = z_scale_sq(k)? * frac(int(k * k * k), 3);
        if var_s2 != var_z || cov_ratio_sq(k, k)? != one {
            rep.diagonal_failures.push(k);
        }
        let mut prev = cov_ratio_sq(k, k)?;
        for m in k + 1..=max {
            let f = cov_ratio_sq(k, m)?;
            rep.pairs += 1;
            if f < one {
                rep.below_one.push((k, m));
            }
            if m > k + 1 && f < prev {
                rep.decreasing.push((k, m - 1));
            }
            prev = f;
        }
    }
    Ok(rep)
}

fn mckean_from(gamma_5_4: f64) -> f64 {
    3.0 * gamma_5_4 / (4.0 * PI * (2.0 * (2.0 * PI).sqrt()).sqrt())
}

/// `3 Gamma(5/4) / (4 pi sqrt(2 sqrt(2 pi)))`.
pub fn mckean_constant() -> f64 {
    mckean_from(gamma_lanczos(1.25))
}

/// The same constant through the Stirling-series Gamma.
pub fn mckean_constant_stirling() -> f64 {
    mckean_from(gamma_stirling(1.25))
}

/// Steps of size `dt` covering `[0, T]`.
fn grid_steps(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt <= 0.05) {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt} must lie in (0, 0.05]"
        )));
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidConfig(format!("T = {t} must be positive")));
    }
    let steps = (t / dt).round();
    if (steps * dt - t).abs() > 1e-9 * t.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "T = {t} is not a multiple of dt = {dt}"
        )));
    }
    Ok(steps as usize)
}

/// Exact joint step of `(B, Y)` over time `h`.
#[derive(Debug, Clone, Copy)]
struct IbmStepper {
    sqrt_h: f64,
    h: f64,
    h32: f64,
}

impl IbmStepper {
    fn new(h: f64) -> Self {
        Self {
            sqrt_h: h.sqrt(),
            h,
            h32: h.powf(1.5),
        }
    }

    /// `dB = sqrt(h) Z1`, `dY = B h + h^{3/2} (Z1 / 2 + Z2 / (2 sqrt 3))`.
    #[inline]
    fn step(&self, b: &mut f64, y: &mut f64, rng: &mut Stream) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        *y += *b * self.h + self.h32 * (0.5 * z1 + z2 * (0.5 / 3f64.sqrt()));
        *b += self.sqrt_h * z1;
    }
}

fn ibm_digest(t: f64, dt: f64, paths: u64, seed: u64) -> String {
    let spec = DistributionSpec::gaussian(1.0).expect("unit gaussian");
    config_digest(
        &format!("ibm|{dt:?}"),
        &spec,
        Order::Two,
        Strictness::Weak,
        t,
        0,
        paths,
        seed,
    )
}

/// `P(max_{j} Y(j dt) <= 1)` for each horizon in `ts`, all from the same
/// paths of length `max(ts)`.
pub fn ibm_sweep(
    ts: &[f64],
    dt: f64,
    paths: u64,
    seed: u64,
    workers: usize,
) -> Result<Vec<Estimate>> {
    let steps: Vec<usize> = ts
        .iter()
        .map(|&t| grid_steps(t, dt))
        .collect::<Result<_>>()?;
    let n = steps.iter().copied().max().unwrap_or(0);
    check_budget(paths, n, DEFAULT_BUDGET)?;
    if paths == 0 {
        return Err(Error::InvalidConfig("paths must be >= 1".into()));
    }
    let stepper = IbmStepper::new(dt);
    let exits = run_chunks(paths, workers, |range| {
        let mut hist = vec![0u64; n + 2];
        for i in range {
            let mut rng = path_stream(seed, i);
            let (mut b, mut y) = (0.0, 0.0);
            let mut exit = n + 1;
            for j in 1..=n {
                stepper.step(&mut b, &mut y, &mut rng);
                if y > 1.0 {
                    exit = j;
                    break;
                }
            }
            hist[exit] += 1;
        }
        hist
    });
    let mut hist = vec![0u64; n + 2];
    for h in &exits {
        hist.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    // survivors[j] = paths still at or below 1 after j steps
    let mut survivors = vec![paths; n + 1];
    for j in 1..=n {
        survivors[j] = survivors[j - 1] - hist[j];
    }
    Ok(ts
        .iter()
        .zip(&steps)
        .map(|(&t, &s)| {
            Estimate::bernoulli(survivors[s], paths, seed, s, ibm_digest(t, dt, paths, seed))
        })
        .collect())
}

/// `P(max_j Y(j dt) <= 1)` over `[0, T]`. `Estimate::n` is the step count.
pub fn simulate_ibm_persistence(
    t: f64,
    dt: f64,
    paths: u64,
    seed: u64,
    workers: usize,
) -> Result<Estimate> {
    Ok(ibm_sweep(&[t], dt, paths, seed, workers)?.remove(0))
}

/// Log-log slope of the sweep with its standard error.
pub fn ibm_slope(sweep: &[Estimate]) -> Result<(f64, f64)> {
    let fit = crate::montecarlo::fit_exponent(sweep)?;
    Ok((-fit.gamma, fit.stderr))
}

/// Same `T`, step `dt` against step `dt / 2`, on independent streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalvingCheck {
    pub coarse: Estimate,
    pub fine: Estimate,
    pub z: f64,
}

impl HalvingCheck {
    pub fn holds(&self) -> bool {
        self.z < SE_ALLOWANCE
    }
}

pub fn dt_halving(t: f64, dt: f64, paths: u64, seed: u64, workers: usize) -> Result<HalvingCheck> {
    let coarse = simulate_ibm_persistence(t, dt, paths, seed, workers)?;
    let fine =
        simulate_ibm_persistence(t, dt / 2.0, paths, derive_seed(seed, 0x6861_6c66), workers)?;
    let z = joint_z(&coarse, &fine);
    Ok(HalvingCheck { coarse, fine, z })
}

fn joint_z(a: &Estimate, b: &Estimate) -> f64 {
    let se = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    let diff = (a.value - b.value).abs();
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// The comparison chain on the integer lattice `k = 1..=n`:
/// `P(max Y(k) <= 1) <= P(max Z(k) < 2) <= P(max S_k^(2) < 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlepianChain {
    pub n: usize,
    pub ibm: Estimate,
    pub scaled: Estimate,
    pub iterated: Estimate,
    /// `(ibm - iterated) / joint stderr`; above 4 flags a violation.
    pub excess_z: f64,
}

impl SlepianChain {
    pub fn holds(&self) -> bool {
        self.ibm.value <= self.scaled.value && self.excess_z <= SE_ALLOWANCE
    }
}

pub fn slepian_chain(n: usize, paths: u64, seed: u64, workers: usize) -> Result<SlepianChain> {
    if n == 0 {
        return Err(Error::SizeOutOfRange {
            n,
            lo: 1,
            hi: usize::MAX,
        });
    }
    check_budget(paths, n, DEFAULT_BUDGET)?;
    let scales: Vec<f64> = (1..=n as u64).map(z_scale).collect::<Result<_>>()?;
    let stepper = IbmStepper::new(1.0);
    let parts = run_chunks(paths, workers, |range| {
        let (mut y_ok, mut z_ok) = (0u64, 0u64);
        for i in range {
            let mut rng = path_stream(seed, i);
            let (mut b, mut y) = (0.0, 0.0);
            let (mut max_y, mut max_z) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for s in &scales {
                stepper.step(&mut b, &mut y, &mut rng);
                max_y = max_y.max(y);
                max_z = max_z.max(s * y);
            }
            y_ok += u64::from(max_y <= 1.0);
            z_ok += u64::from(max_z < 2.0);
        }
        (y_ok, z_ok)
    });
    let (y_ok, z_ok) = parts.iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    let digest = ibm_digest(n as f64, 1.0, paths, seed);
    let ibm = Estimate::bernoulli(y_ok, paths, seed, n, digest.clone());
    let scaled = Estimate::bernoulli(z_ok, paths, seed, n, digest);
    let cfg = RunConfig::new(DistributionSpec::gaussian(1.0)?, Order::Two, n)
        .paths(paths)
        .seed(derive_seed(seed, 0x736c_6570))
        .workers(workers)
        .threshold(2.0);
    let iterated = estimate_persistence(&cfg)?;
    let se = (ibm.stderr.powi(2) + iterated.stderr.powi(2)).sqrt();
    let excess = ibm.value - iterated.value;
    let excess_z = if se > 0.0 {
        excess / se
    } else if excess > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(SlepianChain {
        n,
        ibm,
        scaled,
        iterated,
        excess_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(cov_ibm(1, 1).unwrap(), r(1, 3));
        assert_eq!(cov_ibm(1, 2).unwrap(), r(5, 6));
        assert_eq!(cov_ibm(2, 2).unwrap(), r(8, 3));
        assert_eq!(cov_s2(1, 1).unwrap(), r(1, 1));
        assert_eq!(cov_s2(2, 2).unwrap(), r(5, 1));
        assert_eq!(cov_s2(1, 2).unwrap(), r(2, 1));
        assert!(matches!(
            cov_ibm(2, 1),
            Err(Error::CovOrdering { k: 2, m: 1 })
        ));
        assert!(cov_s2(0, 3).is_err());
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(cov_ratio_sq(7, 7).unwrap(), BigRational::one());
        let f21 = 2.0 / (3f64.sqrt() * 1.875f64.sqrt() * (5.0 / 6.0));
        assert!((cov_ratio(1, 2).unwrap() - f21).abs() < 1e-12);
        assert!((cov_ratio(1, 2).unwrap() - 1.0119).abs() < 1e-4);
        assert!((z_scale(1).unwrap().powi(2) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn claims_hold_on_small_lattice() {
        let rep = slepian_claims(64).unwrap();
        assert!(rep.holds(), "{rep:?}");
        assert_eq!(rep.pairs, 64 * 63 / 2);
    }

    #[test]
    fn mckean_value() {
        let c = mckean_constant();
        assert!(c > 0.0);
        assert!((c - 0.096643).abs() < 5e-7, "{c}");
        assert!((c - mckean_constant_stirling()).abs() < 1e-10);
    }

    #[test]
    fn grid_validation() {
        assert!(simulate_ibm_persistence(1.0, 0.1, 10, 1, 1).is_err());
        assert!(simulate_ibm_persistence(1.005, 0.01, 10, 1, 1).is_err());
        assert!(simulate_ibm_persistence(1.0, 0.01, 0, 1, 1).is_err());
        assert_eq!(grid_steps(16.0, 0.01).unwrap(), 1600);
    }

    #[test]
    fn short_horizon_survives() {
        let e = simulate_ibm_persistence(0.05, 0.05, 10_000, 1, 1).unwrap();
        assert_eq!(e.value, 1.0);
    }

    #[test]
    fn step_has_exact_moments() {
        let stepper = IbmStepper::new(0.5);
        let mut rng = path_stream(3, 0);
        let (mut sbb, mut syy, mut sby) = (0.0, 0.0, 0.0);
        let m = 200_000;
        for _ in 0..m {
            let (mut b, mut y) = (0.0, 0.0);
            stepper.step(&mut b, &mut y, &mut rng);
            sbb += b * b;
            syy += y * y;
            sby += b * y;
        }
        let m = m as f64;
        assert!((sbb / m - 0.5).abs() < 0.01);
        assert!((syy / m - 0.125 / 3.0).abs() < 0.002);
        assert!((sby / m - 0.125).abs() < 0.003);
    }

    #[test]
    fn sweep_is_monotone_and_worker_free() {
        let ts = [0.5, 1.0, 4.0];
        let a = ibm_sweep(&ts, 0.05, 4000, 7, 1).unwrap();
        let b = ibm_sweep(&ts, 0.05, 4000, 7, 3).unwrap();
        assert_eq!(a, b);
        assert!(a[0].value >= a[1].value && a[1].value >= a[2].value);
    }

    #[test]
    fn chain_small() {
        let c = slepian_chain(16, 50_000, 2, 1).unwrap();
        assert!(c.holds(), "{c:?}");
    }
}

//! Constants and convolution bounds relating `p_n^(2)` to `E|S_{n+1}|`.
//!
//! Exact inputs are compared in rational arithmetic; whenever a square root
//! would appear, both sides are squared first. Estimated inputs are compared
//! in floating point with an allowance of four propagated standard errors.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::distributions::{check_decay, DecayParams, DistributionSpec, GridSpec};
use crate::error::{Error, Result};
use crate::exact::to_f64;
use crate::montecarlo::{Estimate, SE_ALLOWANCE};

/// `c_1`: 2 for symmetric steps, `6 sqrt(30)` otherwise.
pub fn c1_constant(symmetric: bool) -> f64 {
    if symmetric {
        2.0
    } else {
        6.0 * 30f64.sqrt()
    }
}

/// `c_1^2` as an exact rational: 4 or 1080.
pub fn c1_squared(symmetric: bool) -> BigRational {
    BigRational::from_integer(BigInt::from(if symmetric { 4 } else { 1080 }))
}

/// `c_2 = K^2 + 2 L_1 kappa^2` with `L_1 = L (K/2 + 1/(theta alpha))` and
/// `kappa = e^alpha theta / (theta - 1/r)`.
pub fn c2_constant(params: &DecayParams) -> Result<f64> {
    let DecayParams {
        k,
        l,
        theta,
        r,
        alpha,
    } = *params;
    if theta * r <= 1.0 || theta.is_nan() {
        return Err(Error::InvalidDecayParams(format!(
            "theta = {theta} must exceed 1/r = {}",
            1.0 / r
        )));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidDecayParams(format!(
            "alpha = {alpha} must be positive"
        )));
    }
    let l1 = l * (k / 2.0 + 1.0 / (theta * alpha));
    let kappa = alpha.exp() * theta / (theta - 1.0 / r);
    Ok(k * k + 2.0 * l1 * kappa * kappa)
}

/// A `c_2` whose decay parameters passed the grid check for its law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifiedC2 {
    pub spec: DistributionSpec,
    pub params: DecayParams,
    pub value: f64,
}

impl CertifiedC2 {
    pub fn certify(spec: &DistributionSpec, params: &DecayParams, grid: &GridSpec) -> Result<Self> {
        let report = check_decay(spec, params, grid)?;
        if !report.holds() {
            return Err(Error::NotCertified(format!(
                "{spec}: {} grid violations (worst at t = {}, s = {})",
                report.violations, report.worst_t, report.worst_s
            )));
        }
        Ok(Self {
            spec: *spec,
            params: *params,
            value: c2_constant(params)?,
        })
    }

    /// Certifies the law's default parameters on the default grid.
    pub fn for_spec(spec: &DistributionSpec) -> Result<Self> {
        Self::certify(spec, &spec.certified_decay_params()?, &GridSpec::default())
    }

    /// A rational not above `value`, so exact lower-bound checks stay sound.
    pub fn rational_floor(&self) -> BigRational {
        let shaded = self.value * (1.0 - 1e-12);
        BigRational::from_f64(shaded).expect("finite c2")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    UpperConvolution,
    LowerConvolution,
    TwoSidedUpper,
    TwoSidedLower,
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundKind::UpperConvolution => "upper-convolution",
            BoundKind::LowerConvolution => "lower-convolution",
            BoundKind::TwoSidedUpper => "two-sided-upper",
            BoundKind::TwoSidedLower => "two-sided-lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Exact,
    Montecarlo,
}

/// A bound ingredient: an exact rational or an estimate with its error.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundInput {
    Exact(BigRational),
    Estimated { value: f64, stderr: f64 },
}

impl BoundInput {
    pub fn value(&self) -> f64 {
        match self {
            BoundInput::Exact(r) => to_f64(r),
            BoundInput::Estimated { value, .. } => *value,
        }
    }

    pub fn stderr(&self) -> f64 {
        match self {
            BoundInput::Exact(_) => 0.0,
            BoundInput::Estimated { stderr, .. } => *stderr,
        }
    }

    fn exact(&self) -> Option<&BigRational> {
        match self {
            BoundInput::Exact(r) => Some(r),
            BoundInput::Estimated { .. } => None,
        }
    }

    /// A known constant such as `E|X_1|` for a continuous law.
    pub fn known(value: f64) -> Self {
        BoundInput::Estimated { value, stderr: 0.0 }
    }
}

impl From<&Estimate> for BoundInput {
    fn from(e: &Estimate) -> Self {
        BoundInput::Estimated {
            value: e.value,
            stderr: e.stderr,
        }
    }
}

impl From<BigRational> for BoundInput {
    fn from(r: BigRational) -> Self {
        BoundInput::Exact(r)
    }
}

/// `sum_{k=0}^n a_k b_{n-k}` of estimates, with the error propagated as if
/// the terms were perfectly correlated (they come from common paths).
pub fn convolution_estimate(a: &[Estimate], b: &[Estimate], n: usize) -> Result<BoundInput> {
    if a.len() <= n || b.len() <= n {
        return Err(Error::IndexOutOfRange {
            index: n,
            lo: 0,
            hi: a.len().min(b.len()).saturating_sub(1),
        });
    }
    let (mut value, mut stderr) = (0.0, 0.0);
    for k in 0..=n {
        let (x, y) = (&a[k], &b[n - k]);
        value += x.value * y.value;
        stderr += x.value * y.stderr + y.value * x.stderr;
    }
    Ok(BoundInput::Estimated { value, stderr })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub inequality: BoundKind,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// Signed so that a non-negative margin means the inequality holds.
    pub margin: f64,
    pub holds: bool,
    pub constants: BTreeMap<String, f64>,
    pub source: Source,
    /// Slack granted to estimated inputs (zero for exact ones).
    pub allowance: f64,
}

/// Which side must be larger.
#[derive(Clone, Copy, PartialEq)]
enum Dir {
    LhsBelow,
    LhsAbove,
}

#[allow(clippy::too_many_arguments)]
fn report(
    inequality: BoundKind,
    n: usize,
    dir: Dir,
    lhs: f64,
    rhs: f64,
    exact: Option<(BigRational, BigRational)>,
    joint_se: f64,
    constants: BTreeMap<String, f64>,
) -> BoundReport {
    let margin = match dir {
        Dir::LhsBelow => rhs - lhs,
        Dir::LhsAbove => lhs - rhs,
    };
    let (holds, source, allowance) = match exact {
        Some((l, r)) => {
            let ok = match dir {
                Dir::LhsBelow => l <= r,
                Dir::LhsAbove => l >= r,
            };
            (ok, Source::Exact, 0.0)
        }
        None => {
            let allowance = SE_ALLOWANCE * joint_se;
            (margin >= -allowance, Source::Montecarlo, allowance)
        }
    };
    BoundReport {
        inequality,
        n,
        lhs,
        rhs,
        margin,
        holds,
        constants,
        source,
        allowance,
    }
}

fn ratio(mean_abs_s: &BoundInput, mean_abs_x: &BoundInput) -> Result<(f64, f64)> {
    let x = mean_abs_x.value();
    if x.is_nan() || x <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "E|X_1| = {x} must be positive"
        )));
    }
    let value = mean_abs_s.value() / x;
    let rel = (mean_abs_s.stderr() / mean_abs_s.value().abs().max(f64::MIN_POSITIVE)).powi(2)
        + (mean_abs_x.stderr() / x).powi(2);
    Ok((value, value * rel.sqrt()))
}

fn exact_ratio(mean_abs_s: &BoundInput, mean_abs_x: &BoundInput) -> Option<BigRational> {
    let x = mean_abs_x.exact()?;
    (!x.is_zero()).then(|| mean_abs_s.exact().map(|s| s / x))?
}

fn joint(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

/// `sum_k p_k pbar_{n-k} <= c_1^2 E|S_{n+1}| / E|X_1|`.
pub fn verify_upper_convolution(
    n: usize,
    conv: &BoundInput,
    mean_abs_s: &BoundInput,
    mean_abs_x: &BoundInput,
    symmetric: bool,
) -> Result<BoundReport> {
    let c1 = c1_constant(symmetric);
    let (q, q_se) = ratio(mean_abs_s, mean_abs_x)?;
    let c1sq = c1_squared(symmetric);
    let c1sq_f = to_f64(&c1sq);
    let exact = conv
        .exact()
        .zip(exact_ratio(mean_abs_s, mean_abs_x))
        .map(|(l, q)| (l.clone(), &c1sq * q));
    let constants = BTreeMap::from([("c1".to_string(), c1)]);
    Ok(report(
        BoundKind::UpperConvolution,
        n,
        Dir::LhsBelow,
        conv.value(),
        c1sq_f * q,
        exact,
        joint(conv.stderr(), c1sq_f * q_se),
        constants,
    ))
}

fn c2_constants(c2: &CertifiedC2) -> BTreeMap<String, f64> {
    let p = c2.params;
    let l1 = p.l * (p.k / 2.0 + 1.0 / (p.theta * p.alpha));
    let kappa = p.alpha.exp() * p.theta / (p.theta - 1.0 / p.r);
    BTreeMap::from([
        ("c2".to_string(), c2.value),
        ("K".to_string(), p.k),
        ("L".to_string(), p.l),
        ("theta".to_string(), p.theta),
        ("r".to_string(), p.r),
        ("alpha".to_string(), p.alpha),
        ("L1".to_string(), l1),
        ("kappa".to_string(), kappa),
    ])
}

/// `sum_k p_k p_{n-k} >= E|S_{n+1}| / (c_2 E|X_1|)`.
pub fn verify_lower_convolution(
    n: usize,
    conv: &BoundInput,
    mean_abs_s: &BoundInput,
    mean_abs_x: &BoundInput,
    c2: &CertifiedC2,
) -> Result<BoundReport> {
    let (q, q_se) = ratio(mean_abs_s, mean_abs_x)?;
    let exact = conv
        .exact()
        .zip(exact_ratio(mean_abs_s, mean_abs_x))
        .map(|(l, q)| (l.clone(), q / c2.rational_floor()));
    Ok(report(
        BoundKind::LowerConvolution,
        n,
        Dir::LhsAbove,
        conv.value(),
        q / c2.value,
        exact,
        joint(conv.stderr(), q_se / c2.value),
        c2_constants(c2),
    ))
}

/// Lower and upper two-sided bounds
/// `sqrt(Q) / (4 c_1 c_2) <= p_n <= c_1 sqrt(Q)` with
/// `Q = E|S_{n+1}| / ((n + 1) E|X_1|)`.
pub fn verify_two_sided(
    n: usize,
    p_n: &BoundInput,
    mean_abs_s: &BoundInput,
    mean_abs_x: &BoundInput,
    symmetric: bool,
    c2: &CertifiedC2,
) -> Result<(BoundReport, BoundReport)> {
    let c1 = c1_constant(symmetric);
    let (q, q_se) = ratio(mean_abs_s, mean_abs_x)?;
    let q = q / (n as f64 + 1.0);
    let q_se = q_se / (n as f64 + 1.0);
    let root = q.sqrt();
    // d sqrt(q) = dq / (2 sqrt(q))
    let root_se = if root > 0.0 { q_se / (2.0 * root) } else { 0.0 };
    let exact_q = exact_ratio(mean_abs_s, mean_abs_x)
        .map(|r| r / BigRational::from_integer(BigInt::from(n + 1)));
    let exact_p = p_n.exact();
    let c1sq = c1_squared(symmetric);

    let lower_exact = exact_p.zip(exact_q.clone()).map(|(p, q)| {
        let scale =
            BigRational::from_integer(BigInt::from(16)) * &c1sq * c2.rational_floor().pow(2);
        (p * p * scale, q)
    });
    let mut lower_constants = c2_constants(c2);
    lower_constants.insert("c1".to_string(), c1);
    let lower_rhs = root / (4.0 * c1 * c2.value);
    let lower = report(
        BoundKind::TwoSidedLower,
        n,
        Dir::LhsAbove,
        p_n.value(),
        lower_rhs,
        lower_exact,
        joint(p_n.stderr(), root_se / (4.0 * c1 * c2.value)),
        lower_constants,
    );

    let upper_exact = exact_p.zip(exact_q).map(|(p, q)| (p * p, &c1sq * q));
    let upper = report(
        BoundKind::TwoSidedUpper,
        n,
        Dir::LhsBelow,
        p_n.value(),
        c1 * root,
        upper_exact,
        joint(p_n.stderr(), c1 * root_se),
        BTreeMap::from([("c1".to_string(), c1)]),
    );
    Ok((lower, upper))
}

impl BoundReport {
    pub fn is_exact(&self) -> bool {
        self.source == Source::Exact
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{convolve, mean_abs_sn_rademacher, order2_table, Strictness};

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn one() -> BoundInput {
        BoundInput::Exact(rat(1, 1))
    }

    #[test]
    fn c1_values() {
        assert_eq!(c1_constant(true), 2.0);
        assert!((c1_constant(false) - 32.863353450309965).abs() < 1e-12);
        assert!(c1_constant(false) >= c1_constant(true));
        assert_eq!(
            to_f64(&c1_squared(false)),
            c1_constant(false).powi(2).round()
        );
    }

    #[test]
    fn c2_examples() {
        let laplace = DistributionSpec::laplace(1.0).unwrap();
        let p = DecayParams::new(&laplace, 2.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(c2_constant(&p).unwrap(), 4.0);
        let p = DecayParams::new(&laplace, 1.0, 0.0, 3.0, 1.0).unwrap();
        assert_eq!(c2_constant(&p).unwrap(), 1.0);
        let rad = CertifiedC2::for_spec(&DistributionSpec::rademacher()).unwrap();
        let expected = 2.0 / 2f64.ln() * 144.0;
        assert!(
            (rad.value - expected).abs() < 1e-9 * expected,
            "{}",
            rad.value
        );
        assert!(to_f64(&rad.rational_floor()) <= rad.value);
    }

    #[test]
    fn c2_rejects_bad_params() {
        let mut p = DistributionSpec::rademacher()
            .certified_decay_params()
            .unwrap();
        p.theta = 1.0;
        assert!(c2_constant(&p).is_err());
        p.theta = 2.0;
        p.alpha = 0.0;
        assert!(c2_constant(&p).is_err());
    }

    #[test]
    fn c2_monotone_in_k_and_l() {
        let spec = DistributionSpec::gaussian(1.0).unwrap();
        let grid = [0.0, 0.5, 1.0, 2.0, 4.0];
        for &theta in &[1.5, 3.0] {
            for (i, &k) in grid.iter().enumerate() {
                for (j, &l) in grid.iter().enumerate() {
                    let base =
                        c2_constant(&DecayParams::new(&spec, k, l, theta, 1.0).unwrap()).unwrap();
                    if i + 1 < grid.len() {
                        let up = DecayParams::new(&spec, grid[i + 1], l, theta, 1.0).unwrap();
                        assert!(c2_constant(&up).unwrap() >= base);
                    }
                    if j + 1 < grid.len() {
                        let up = DecayParams::new(&spec, k, grid[j + 1], theta, 1.0).unwrap();
                        assert!(c2_constant(&up).unwrap() >= base);
                    }
                }
            }
        }
    }

    #[test]
    fn uncertified_params_rejected() {
        let laplace = DistributionSpec::laplace(1.0).unwrap();
        let weak = DecayParams::new(&laplace, 0.1, 0.0, 3.0, 1.0).unwrap();
        assert!(matches!(
            CertifiedC2::certify(&laplace, &weak, &GridSpec::default()),
            Err(Error::NotCertified(_))
        ));
    }

    #[test]
    fn rademacher_upper_examples() {
        let t = order2_table(2).unwrap();
        let conv = t
            .convolution(Strictness::Strict, Strictness::Weak, 2)
            .unwrap();
        assert_eq!(conv[2], rat(5, 4));
        let r = verify_upper_convolution(
            2,
            &conv[2].clone().into(),
            &mean_abs_sn_rademacher(3).into(),
            &one(),
            true,
        )
        .unwrap();
        assert!(r.holds && r.is_exact());
        assert_eq!((r.lhs, r.rhs), (1.25, 6.0));
        let r0 = verify_upper_convolution(0, &one(), &one(), &one(), true).unwrap();
        assert_eq!((r0.lhs, r0.rhs, r0.margin), (1.0, 4.0, 3.0));
    }

    #[test]
    fn exact_failure_is_reported() {
        let r = verify_upper_convolution(0, &rat(5, 1).into(), &one(), &one(), true).unwrap();
        assert!(!r.holds && r.margin < 0.0);
    }

    #[test]
    fn estimated_inputs_get_allowance() {
        let conv = BoundInput::Estimated {
            value: 4.1,
            stderr: 0.05,
        };
        let r = verify_upper_convolution(0, &conv, &one(), &one(), true).unwrap();
        assert_eq!(r.source, Source::Montecarlo);
        assert!(r.holds && (r.allowance - 0.2).abs() < 1e-12);
    }

    #[test]
    fn rademacher_lower_exact() {
        let c2 = CertifiedC2::for_spec(&DistributionSpec::rademacher()).unwrap();
        let t = order2_table(64).unwrap();
        let conv = t
            .convolution(Strictness::Strict, Strictness::Strict, 64)
            .unwrap();
        for (n, c) in conv.iter().enumerate().take(65) {
            let r = verify_lower_convolution(
                n,
                &c.clone().into(),
                &mean_abs_sn_rademacher(n + 1).into(),
                &one(),
                &c2,
            )
            .unwrap();
            assert!(r.holds && r.is_exact(), "n = {n}");
        }
    }

    #[test]
    fn two_sided_example() {
        let c2 = CertifiedC2::for_spec(&DistributionSpec::rademacher()).unwrap();
        let (lo, hi) = verify_two_sided(
            3,
            &rat(3, 8).into(),
            &mean_abs_sn_rademacher(4).into(),
            &one(),
            true,
            &c2,
        )
        .unwrap();
        assert!(lo.holds && hi.holds);
        assert!((hi.rhs - 2.0 * (1.5f64 / 4.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn convolution_is_symmetric() {
        let t = order2_table(40).unwrap();
        let p = t.probs(Strictness::Strict);
        let q = t.probs(Strictness::Weak);
        let forward = convolve(&p, &q);
        let backward = convolve(&q, &p);
        assert_eq!(forward, backward);
        let self_conv = convolve(&p, &p);
        for n in 0..=40 {
            let rev = (0..=n).fold(BigRational::zero(), |acc, k| acc + &p[n - k] * &p[k]);
            assert_eq!(self_conv[n], rev);
        }
    }

    #[test]
    fn estimated_convolution_propagation() {
        let e = |value, stderr| Estimate {
            value,
            stderr,
            paths: 1,
            seed: 0,
            n: 0,
            config_digest: String::new(),
        };
        let a = vec![e(1.0, 0.0), e(0.5, 0.01)];
        let conv = convolution_estimate(&a, &a, 1).unwrap();
        assert_eq!(conv.value(), 1.0);
        assert!((conv.stderr() - 0.02).abs() < 1e-15);
        assert!(convolution_estimate(&a, &a, 2).is_err());
    }
}

//! Increment laws: exact moments and lower tails, sampling, and a grid
//! falsification check of the lower-tail decay condition
//!
//! ```text
//! P(-X > t + s) <= K P(-X > t) P(-X > s) + L P(-X > r)^(theta (t + s))
//! ```

use std::f64::consts::FRAC_2_PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_pdf, normal_sf};

/// The supported zero-mean increment laws.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    /// `±1` with probability 1/2 each.
    Rademacher,
    /// Centered normal with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Density `(lambda / 2) exp(-lambda |x|)`.
    Laplace { lambda: f64 },
    /// `Y - alpha / (alpha - 1)` where `P(Y > y) = y^-alpha` for `y >= 1`.
    ShiftedPareto { alpha: f64 },
}

/// A validated increment law.
///
/// Serializes as its short text form (`rademacher`, `gaussian:1`,
/// `laplace:1`, `pareto:1.5`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct DistributionSpec {
    law: Law,
}

impl DistributionSpec {
    pub fn new(law: Law) -> Result<Self> {
        match law {
            Law::Rademacher => {}
            Law::Gaussian { sigma } if !(sigma.is_finite() && sigma > 0.0) => {
                return Err(Error::InvalidDistribution(format!(
                    "sigma = {sigma} must be > 0"
                )))
            }
            Law::Laplace { lambda } if !(lambda.is_finite() && lambda > 0.0) => {
                return Err(Error::InvalidDistribution(format!(
                    "lambda = {lambda} must be > 0"
                )))
            }
            Law::ShiftedPareto { alpha } if !(alpha > 1.0 && alpha < 2.0) => {
                return Err(Error::InvalidDistribution(format!(
                    "pareto index {alpha} must lie in (1, 2)"
                )))
            }
            _ => {}
        }
        Ok(Self { law })
    }

    pub fn rademacher() -> Self {
        Self {
            law: Law::Rademacher,
        }
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        Self::new(Law::Gaussian { sigma })
    }

    pub fn laplace(lambda: f64) -> Result<Self> {
        Self::new(Law::Laplace { lambda })
    }

    pub fn shifted_pareto(alpha: f64) -> Result<Self> {
        Self::new(Law::ShiftedPareto { alpha })
    }

    pub fn law(&self) -> Law {
        self.law
    }

    pub fn is_symmetric(&self) -> bool {
        !matches!(self.law, Law::ShiftedPareto { .. })
    }

    pub fn has_density(&self) -> bool {
        !matches!(self.law, Law::Rademacher)
    }

    /// Finite variance, when it exists.
    pub fn variance(&self) -> Option<f64> {
        match self.law {
            Law::Rademacher => Some(1.0),
            Law::Gaussian { sigma } => Some(sigma * sigma),
            Law::Laplace { lambda } => Some(2.0 / (lambda * lambda)),
            Law::ShiftedPareto { .. } => None,
        }
    }

    /// One draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.law {
            Law::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Law::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            Law::Laplace { lambda } => {
                // 1 - u lies in (0, 1], so the logarithm is finite.
                let u: f64 = rng.random();
                let magnitude = -(1.0 - u).ln() / lambda;
                if rng.random::<bool>() {
                    magnitude
                } else {
                    -magnitude
                }
            }
            Law::ShiftedPareto { alpha } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                u.powf(-1.0 / alpha) - pareto_mean(alpha)
            }
        }
    }

    /// `E|X|` in closed form.
    pub fn mean_abs(&self) -> f64 {
        match self.law {
            Law::Rademacher => 1.0,
            Law::Gaussian { sigma } => sigma * FRAC_2_PI.sqrt(),
            Law::Laplace { lambda } => 1.0 / lambda,
            Law::ShiftedPareto { alpha } => {
                let m = pareto_mean(alpha);
                2.0 * m.powf(1.0 - alpha) / (alpha - 1.0)
            }
        }
    }

    /// `P(-X > t)` in closed form, for `t >= 0`.
    pub fn lower_tail(&self, t: f64) -> f64 {
        match self.law {
            Law::Rademacher => {
                if t < 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
            Law::Gaussian { sigma } => normal_sf(t / sigma),
            Law::Laplace { lambda } => 0.5 * (-lambda * t).exp(),
            Law::ShiftedPareto { alpha } => {
                // -X > t  <=>  Y < m - t, and Y >= 1.
                let edge = pareto_mean(alpha) - t;
                if edge <= 1.0 {
                    0.0
                } else {
                    1.0 - edge.powf(-alpha)
                }
            }
        }
    }

    /// `g(t) = ∫_0^∞ P(-X > t + u) du = E[(X + t)^-]`, for `t >= 0`.
    pub fn tail_integral(&self, t: f64) -> f64 {
        match self.law {
            Law::Rademacher => 0.5 * (1.0 - t).max(0.0),
            Law::Gaussian { sigma } => {
                let z = t / sigma;
                sigma * normal_pdf(z) - t * normal_sf(z)
            }
            Law::Laplace { lambda } => 0.5 * (-lambda * t).exp() / lambda,
            Law::ShiftedPareto { alpha } => {
                let edge = pareto_mean(alpha) - t;
                if edge <= 1.0 {
                    0.0
                } else {
                    // ∫_1^edge (1 - w^-alpha) dw
                    (edge - 1.0) - (edge.powf(1.0 - alpha) - 1.0) / (1.0 - alpha)
                }
            }
        }
    }

    /// Default decay parameters that pass the grid check for this law.
    ///
    /// Laplace satisfies the condition with equality for `K = 2, L = 0`; the
    /// other laws use `K = 0` with a geometric term.
    pub fn certified_decay_params(&self) -> Result<DecayParams> {
        match self.law {
            Law::Rademacher => DecayParams::new(self, 0.0, 2.0, 2.0, 0.6),
            Law::Gaussian { sigma } => DecayParams::new(self, 0.0, 2.0, 1.1 / sigma, sigma),
            Law::Laplace { lambda } => DecayParams::new(self, 2.0, 0.0, 3.0 * lambda, 1.0 / lambda),
            Law::ShiftedPareto { .. } => DecayParams::new(self, 0.0, 2.0, 2.0, 1.0),
        }
    }
}

fn pareto_mean(alpha: f64) -> f64 {
    alpha / (alpha - 1.0)
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.law {
            Law::Rademacher => write!(f, "rademacher"),
            Law::Gaussian { sigma } => write!(f, "gaussian:{sigma}"),
            Law::Laplace { lambda } => write!(f, "laplace:{lambda}"),
            Law::ShiftedPareto { alpha } => write!(f, "pareto:{alpha}"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.split_once(':') {
            Some((name, param)) => (name, Some(param)),
            None => (s, None),
        };
        let value = |default: Option<f64>| -> Result<f64> {
            match param {
                Some(p) => p
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ParseSpec(s.to_string())),
                None => default.ok_or_else(|| Error::ParseSpec(s.to_string())),
            }
        };
        match name.to_ascii_lowercase().as_str() {
            "rademacher" if param.is_none() => Ok(Self::rademacher()),
            "gaussian" | "normal" => Self::gaussian(value(Some(1.0))?),
            "laplace" => Self::laplace(value(Some(1.0))?),
            "pareto" => Self::shifted_pareto(value(None)?),
            _ => Err(Error::ParseSpec(s.to_string())),
        }
    }
}

impl From<DistributionSpec> for String {
    fn from(spec: DistributionSpec) -> Self {
        spec.to_string()
    }
}

impl TryFrom<String> for DistributionSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Parameters of the decay condition, with the derived rate
/// `alpha = -ln P(-X > r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub k: f64,
    pub l: f64,
    pub theta: f64,
    pub r: f64,
    pub alpha: f64,
}

impl DecayParams {
    pub fn new(spec: &DistributionSpec, k: f64, l: f64, theta: f64, r: f64) -> Result<Self> {
        if !(k.is_finite() && k >= 0.0 && l.is_finite() && l >= 0.0) {
            return Err(Error::InvalidDecayParams(format!(
                "need finite K, L >= 0 (K = {k}, L = {l})"
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidDecayParams(format!("need r > 0 (r = {r})")));
        }
        if !(theta.is_finite() && theta * r > 1.0) {
            return Err(Error::InvalidDecayParams(format!(
                "need theta > 1/r (theta = {theta}, r = {r})"
            )));
        }
        let alpha = -spec.lower_tail(r).ln();
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidDecayParams(format!(
                "-ln P(-X > {r}) = {alpha} must be finite and positive"
            )));
        }
        Ok(Self {
            k,
            l,
            theta,
            r,
            alpha,
        })
    }
}

/// The `(t, s)` grid used by [`check_decay`]: the same axis for both
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
    pub logarithmic: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: 1e-2,
            hi: 20.0,
            points: 200,
            logarithmic: true,
        }
    }
}

impl GridSpec {
    pub fn axis(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.lo];
        }
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                let frac = i as f64 / last;
                if self.logarithmic {
                    (self.lo.ln() + frac * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + frac * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

/// Result of scanning the decay condition over a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub spec: DistributionSpec,
    pub params: DecayParams,
    pub grid: GridSpec,
    /// Max over the grid of `lhs - rhs`.
    pub max_violation: f64,
    pub worst_t: f64,
    pub worst_s: f64,
    /// Points where `lhs` exceeds `rhs` beyond relative rounding.
    pub violations: usize,
}

impl DecayReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

const DECAY_ROUNDING: f64 = 1e-12;

pub fn check_decay(
    spec: &DistributionSpec,
    params: &DecayParams,
    grid: &GridSpec,
) -> Result<DecayReport> {
    let axis = grid.axis();
    let tails: Vec<f64> = axis.iter().map(|&t| spec.lower_tail(t)).collect();
    let mut report = DecayReport {
        spec: *spec,
        params: *params,
        grid: *grid,
        max_violation: f64::NEG_INFINITY,
        worst_t: f64::NAN,
        worst_s: f64::NAN,
        violations: 0,
    };
    for (i, &t) in axis.iter().enumerate() {
        for (j, &s) in axis.iter().enumerate() {
            let lhs = spec.lower_tail(t + s);
            let rhs = params.k * tails[i] * tails[j]
                + params.l * (-params.alpha * params.theta * (t + s)).exp();
            if !(lhs.is_finite() && rhs.is_finite()) {
                return Err(Error::NonFiniteTail { t, s });
            }
            let gap = lhs - rhs;
            if gap > report.max_violation {
                report.max_violation = gap;
                report.worst_t = t;
                report.worst_s = s;
            }
            if gap > DECAY_ROUNDING * lhs.abs().max(rhs.abs()) {
                report.violations += 1;
            }
        }
    }
    Ok(report)
}

/// Persistence exponent `(1 - 1/alpha) / 2` for the shifted Pareto family.
pub fn stable_exponent(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::InvalidDistribution(format!(
            "stable index {alpha} must lie in (1, 2)"
        )));
    }
    Ok((1.0 - 1.0 / alpha) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::path_stream;
    use std::f64::consts::LN_2;

    fn all_specs() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::rademacher(),
            DistributionSpec::gaussian(1.0).unwrap(),
            DistributionSpec::laplace(1.0).unwrap(),
            DistributionSpec::shifted_pareto(1.5).unwrap(),
        ]
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DistributionSpec::gaussian(0.0).is_err());
        assert!(DistributionSpec::gaussian(-1.0).is_err());
        assert!(DistributionSpec::laplace(0.0).is_err());
        assert!(DistributionSpec::shifted_pareto(1.0).is_err());
        assert!(DistributionSpec::shifted_pareto(2.0).is_err());
        assert!(DistributionSpec::shifted_pareto(f64::NAN).is_err());
    }

    #[test]
    fn text_form() {
        for spec in all_specs() {
            let text = spec.to_string();
            assert_eq!(text.parse::<DistributionSpec>().unwrap(), spec);
        }
        assert_eq!(
            "gaussian:1.0".parse::<DistributionSpec>().unwrap(),
            DistributionSpec::gaussian(1.0).unwrap()
        );
        assert_eq!(
            DistributionSpec::shifted_pareto(1.5).unwrap().to_string(),
            "pareto:1.5"
        );
        assert!("pareto".parse::<DistributionSpec>().is_err());
        assert!("cauchy:1".parse::<DistributionSpec>().is_err());
        assert!("rademacher:2".parse::<DistributionSpec>().is_err());
        let json = serde_json::to_string(&DistributionSpec::laplace(2.0).unwrap()).unwrap();
        assert_eq!(json, "\"laplace:2\"");
    }

    #[test]
    fn sample_supports() {
        let mut rng = path_stream(1, 0);
        let rad = DistributionSpec::rademacher();
        let par = DistributionSpec::shifted_pareto(1.5).unwrap();
        for _ in 0..10_000 {
            let x = rad.sample(&mut rng);
            assert!(x == 1.0 || x == -1.0);
            assert!(par.sample(&mut rng) >= -2.0);
        }
    }

    #[test]
    fn gaussian_sample_mean() {
        let spec = DistributionSpec::gaussian(1.0).unwrap();
        let mut rng = path_stream(11, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| spec.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.003, "mean {mean}");
    }

    #[test]
    fn mean_abs_values() {
        assert_eq!(DistributionSpec::rademacher().mean_abs(), 1.0);
        assert!((DistributionSpec::laplace(1.0).unwrap().mean_abs() - 1.0).abs() < 1e-15);
        let p = DistributionSpec::shifted_pareto(1.5).unwrap().mean_abs();
        assert!((p - 2.309_401_076_758_503).abs() < 1e-12, "{p}");
    }

    #[test]
    fn lower_tail_values() {
        let laplace = DistributionSpec::laplace(1.0).unwrap();
        assert!((laplace.lower_tail(LN_2) - 0.25).abs() < 1e-15);
        assert_eq!(DistributionSpec::rademacher().lower_tail(0.5), 0.5);
        assert_eq!(DistributionSpec::rademacher().lower_tail(1.0), 0.0);
        let par = DistributionSpec::shifted_pareto(1.5).unwrap();
        assert_eq!(par.lower_tail(2.0), 0.0);
        assert_eq!(par.lower_tail(7.0), 0.0);
        assert!(par.lower_tail(1.999) > 0.0);
    }

    #[test]
    fn lower_tail_monotone() {
        for spec in all_specs() {
            let mut prev = f64::INFINITY;
            for i in 0..4000 {
                let v = spec.lower_tail(i as f64 * 0.005);
                assert!(v <= prev, "{spec} at {i}");
                prev = v;
            }
        }
    }

    #[test]
    fn tail_integral_values() {
        for spec in all_specs() {
            assert!(
                (spec.tail_integral(0.0) / spec.mean_abs() - 0.5).abs() < 1e-12,
                "{spec}"
            );
        }
        let laplace = DistributionSpec::laplace(1.0).unwrap();
        assert!((laplace.tail_integral(1.0) - 0.183_939_720_585_721_16).abs() < 1e-15);
        assert_eq!(DistributionSpec::rademacher().tail_integral(1.0), 0.0);
        assert_eq!(
            DistributionSpec::shifted_pareto(1.5)
                .unwrap()
                .tail_integral(2.5),
            0.0
        );
    }

    #[test]
    fn decay_certified_examples() {
        let grid = GridSpec::default();
        let laplace = DistributionSpec::laplace(1.0).unwrap();
        let params = DecayParams::new(&laplace, 2.0, 0.0, 3.0, 1.0).unwrap();
        let report = check_decay(&laplace, &params, &grid).unwrap();
        assert!(report.holds());
        assert!(
            report.max_violation.abs() < 1e-15,
            "{}",
            report.max_violation
        );

        let rad = DistributionSpec::rademacher();
        let params = DecayParams::new(&rad, 0.0, 2.0, 2.0, 0.6).unwrap();
        assert!((params.alpha - LN_2).abs() < 1e-15);
        assert!(check_decay(&rad, &params, &grid).unwrap().holds());

        for spec in all_specs() {
            let params = spec.certified_decay_params().unwrap();
            assert!(
                check_decay(&spec, &params, &grid).unwrap().holds(),
                "{spec}"
            );
        }
    }

    #[test]
    fn decay_detects_violation() {
        let gauss = DistributionSpec::gaussian(1.0).unwrap();
        let params = DecayParams::new(&gauss, 0.0, 0.1, 1.1, 1.0).unwrap();
        let report = check_decay(&gauss, &params, &GridSpec::default()).unwrap();
        assert!(!report.holds());
        assert!(report.max_violation > 0.0);
    }

    #[test]
    fn decay_params_validation() {
        let rad = DistributionSpec::rademacher();
        assert!(DecayParams::new(&rad, 0.0, 1.0, 1.0, 0.5).is_err());
        assert!(DecayParams::new(&rad, -1.0, 1.0, 3.0, 0.5).is_err());
        // P(-X > 1) = 0 gives an infinite rate.
        assert!(DecayParams::new(&rad, 0.0, 1.0, 3.0, 1.0).is_err());
    }

    #[test]
    fn stable_exponent_values() {
        assert!((stable_exponent(1.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((stable_exponent(4.0 / 3.0).unwrap() - 0.125).abs() < 1e-15);
        assert!((stable_exponent(2.0 - 1e-12).unwrap() - 0.25).abs() < 1e-11);
        assert!(stable_exponent(2.0).is_err());
        assert!(stable_exponent(1.0).is_err());
    }
}

use serde::{Deserialize, Serialize};

use super::Estimate;
use crate::error::{Error, Result};

/// Points with fewer expected events than this are dropped from fits.
pub const MIN_EVENTS: f64 = 100.0;

/// Power-law fit `p_n ~ C n^{-gamma}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub gamma: f64,
    pub stderr: f64,
    pub intercept: f64,
    /// Horizons that entered the fit.
    pub used: Vec<usize>,
    pub excluded: Vec<usize>,
}

/// Weighted least squares of `ln p` on `ln n`, returning the negated slope.
///
/// Weights are `p^2 / stderr^2` (the delta-method variance of `ln p`); if any
/// stderr is zero all weights are 1 and the slope error comes from residuals.
pub fn fit_exponent(points: &[Estimate]) -> Result<ExponentFit> {
    let (usable, dropped): (Vec<&Estimate>, Vec<&Estimate>) = points
        .iter()
        .partition(|p| p.n > 0 && p.value > 0.0 && p.value * p.paths as f64 >= MIN_EVENTS);
    if usable.len() < 3 {
        return Err(Error::InsufficientPoints {
            needed: 3,
            got: usable.len(),
        });
    }
    let unit = usable.iter().any(|p| p.stderr <= 0.0);
    let xs: Vec<f64> = usable.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.value.ln()).collect();
    let ws: Vec<f64> = usable
        .iter()
        .map(|p| {
            if unit {
                1.0
            } else {
                (p.value / p.stderr).powi(2)
            }
        })
        .collect();
    let sw: f64 = ws.iter().sum();
    let xbar = ws.iter().zip(&xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ybar = ws.iter().zip(&ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws
        .iter()
        .zip(&xs)
        .map(|(w, x)| w * (x - xbar).powi(2))
        .sum();
    let sxy: f64 = ws
        .iter()
        .zip(xs.iter().zip(&ys))
        .map(|(w, (x, y))| w * (x - xbar) * (y - ybar))
        .sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidConfig(
            "fit needs at least two distinct n".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let stderr = if unit {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| (y - intercept - slope * x).powi(2))
            .sum();
        (rss / (xs.len() - 2) as f64 / sxx).sqrt()
    } else {
        (1.0 / sxx).sqrt()
    };
    Ok(ExponentFit {
        gamma: -slope,
        stderr,
        intercept,
        used: usable.iter().map(|p| p.n).collect(),
        excluded: dropped.iter().map(|p| p.n).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(n: usize, value: f64, stderr: f64, paths: u64) -> Estimate {
        Estimate {
            value,
            stderr,
            paths,
            seed: 0,
            n,
            config_digest: String::new(),
        }
    }

    #[test]
    fn exact_power_law() {
        let pts: Vec<_> = [16usize, 64, 256]
            .iter()
            .map(|&n| point(n, (n as f64).powf(-0.25), 0.0, 1_000_000))
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.gamma - 0.25).abs() < 1e-12);
        assert!(fit.stderr < 1e-12);
    }

    #[test]
    fn weighted_power_law() {
        let pts: Vec<_> = [10usize, 100, 1000, 10000]
            .iter()
            .map(|&n| {
                let p = 0.8 * (n as f64).powf(-0.5);
                point(n, p, p * 0.01, 1_000_000)
            })
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        assert!((fit.gamma - 0.5).abs() < 1e-12);
        assert!((fit.intercept - 0.8f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rare_points_are_excluded() {
        let mut pts: Vec<_> = [16usize, 64, 256]
            .iter()
            .map(|&n| point(n, (n as f64).powf(-0.25), 1e-3, 100_000))
            .collect();
        pts.push(point(4096, 1e-4, 1e-5, 100_000));
        let fit = fit_exponent(&pts).unwrap();
        assert_eq!(fit.excluded, vec![4096]);
        pts.remove(0);
        assert!(matches!(
            fit_exponent(&pts),
            Err(Error::InsufficientPoints { needed: 3, got: 2 })
        ));
    }
}

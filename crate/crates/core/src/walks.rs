//! Path arithmetic for partial sums `S_k` and iterated sums `S_k^(2)`.
//!
//! Indices follow the convention `S_0 = S_0^(2) = 0`; increments are stored
//! zero-based but every public index below is one-based, so `x(k)` is `X_k`.
//!
//! For a shift `t`, the first maximizer over `j in 0..=n` of
//! `(j + 1) t + S_j^(2)` equals `k` exactly when `t` lies in the half-open
//! interval returned by [`k_interval`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite sequence of increments `X_1, ..., X_n`, `n >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Path {
    increments: Vec<f64>,
}

impl Path {
    pub fn new(increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidPath { min: 1, got: 0 });
        }
        if let Some(index) = increments.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteIncrement { index: index + 1 });
        }
        Ok(Self { increments })
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `X_k` for `1 <= k <= n`.
    pub fn x(&self, k: usize) -> f64 {
        self.increments[k - 1]
    }

    /// Comma-separated increments, formatted for exact round-trips.
    pub fn to_csv_row(&self) -> String {
        self.increments
            .iter()
            .map(|x| format!("{x:?}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let increments = row
            .split(',')
            .map(|field| {
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Serialization(format!("bad path field `{field}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(increments)
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        partial_sums(self)
    }
}

impl TryFrom<Vec<f64>> for Path {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Path> for Vec<f64> {
    fn from(p: Path) -> Self {
        p.increments
    }
}

/// `(S_0, S_1, ..., S_n)` with `S_0 = 0`.
pub fn partial_sums(path: &Path) -> Vec<f64> {
    let mut out = Vec::with_capacity(path.len() + 1);
    let mut s = 0.0;
    out.push(s);
    for &x in path.increments() {
        s += x;
        out.push(s);
    }
    out
}

/// `(S_0^(2), ..., S_n^(2))`, computed both as the running sum of partial
/// sums and as `(k + 1) S_k - sum_i i X_i`, which equals
/// `sum_i (k - i + 1) X_i`. The two routes must agree to within eight
/// rounding units per accumulated term.
pub fn iterated_sums(path: &Path) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(path.len() + 1);
    out.push(0.0);
    let (mut s, mut cumulative, mut index_weighted, mut magnitude) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (i, &x) in path.increments().iter().enumerate() {
        let k = (i + 1) as f64;
        s += x;
        cumulative += s;
        index_weighted += k * x;
        magnitude += x.abs();
        let weighted = (k + 1.0) * s - index_weighted;
        let tol = 8.0 * f64::EPSILON * k * (k + 1.0) * magnitude;
        if (cumulative - weighted).abs() > tol {
            return Err(Error::IteratedSumMismatch {
                index: i + 1,
                cumulative,
                weighted,
            });
        }
        out.push(cumulative);
    }
    Ok(out)
}

/// Smallest index attaining the maximum; `None` for an empty slice.
pub fn first_argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// `max_{j=1..jmax} (j X_k + (j-1) X_{k-step} + ... + X_{k-(j-1) step}) / (j + 1)`
/// walking away from `k` in direction `step`; `-inf` when `jmax = 0`.
fn weighted_run_max(path: &Path, k: usize, jmax: usize, backward: bool) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let (mut run, mut weighted) = (0.0, 0.0);
    for j in 1..=jmax {
        let idx = if backward { k + 1 - j } else { k + j - 1 };
        run += path.x(idx);
        weighted += run;
        best = best.max(weighted / (j as f64 + 1.0));
    }
    best
}

/// `Y_{k,2}` of the slice `xs = (X_1, ..., X_k)`.
pub fn y_left_of(xs: &[f64]) -> f64 {
    let mut best = f64::NEG_INFINITY;
    let (mut run, mut weighted) = (0.0, 0.0);
    for (j, &x) in xs.iter().skip(1).rev().enumerate() {
        run += x;
        weighted += run;
        best = best.max(weighted / (j as f64 + 2.0));
    }
    best
}

/// `Y_{k,2}` for `1 <= k <= n`: the maximum over `j = 1..k-1` of
/// `(j X_k + (j-1) X_{k-1} + ... + X_{k-j+1}) / (j + 1)`; `-inf` for `k = 1`.
pub fn y_left(path: &Path, k: usize) -> Result<f64> {
    check_range(k, 1, path.len())?;
    Ok(weighted_run_max(path, k, k - 1, true))
}

/// `Y_{k,n}` for `1 <= k <= n + 1`: the maximum over `j = 1..n-k+1` of
/// `(j X_k + (j-1) X_{k+1} + ... + X_{k+j-1}) / (j + 1)`; `-inf` for `k = n + 1`.
pub fn y_right(path: &Path, k: usize) -> Result<f64> {
    let n = path.len();
    check_range(k, 1, n + 1)?;
    Ok(weighted_run_max(path, k, n + 1 - k, false))
}

/// `(Y_{k,2}, Y_{k,n})` for `1 <= k <= n`.
pub fn y_stats(path: &Path, k: usize) -> Result<(f64, f64)> {
    Ok((y_left(path, k)?, y_right(path, k)?))
}

fn check_range(index: usize, lo: usize, hi: usize) -> Result<()> {
    if index < lo || index > hi {
        Err(Error::IndexOutOfRange { index, lo, hi })
    } else {
        Ok(())
    }
}

/// Upper hull of points with increasing abscissa, answering "minimum slope
/// from a point to the right of every stored point".
#[derive(Default)]
struct UpperHull {
    pts: Vec<(f64, f64)>,
}

impl UpperHull {
    fn push(&mut self, p: (f64, f64)) {
        while self.pts.len() >= 2 {
            let a = self.pts[self.pts.len() - 2];
            let b = self.pts[self.pts.len() - 1];
            // Drop b when it is on or below the chord a -> p.
            if (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0 {
                self.pts.pop();
            } else {
                break;
            }
        }
        self.pts.push(p);
    }

    /// Stored point minimizing the slope to `q`.
    fn tangent_from(&self, q: (f64, f64)) -> (f64, f64) {
        let slope = |p: (f64, f64)| (q.1 - p.1) / (q.0 - p.0);
        // The slope from q along the hull is unimodal; find its minimum.
        let (mut lo, mut hi) = (0usize, self.pts.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if slope(self.pts[mid + 1]) <= slope(self.pts[mid]) {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        self.pts[lo]
    }
}

/// `S_k - mean(S_{m+1}, ..., S_k)` for the tangent point `m`, evaluated as
/// `((j + 1) S_k - (V_k - V_m)) / (j + 1)` so integer paths round once, like
/// the direct sum.
fn suffix_excess(s_k: f64, q: (f64, f64), m: (f64, f64)) -> f64 {
    let width = q.0 - m.0;
    (width * s_k - (q.1 - m.1)) / width
}

/// `Y_{k,2}` for every `k = 1..=n` in `O(n log n)`.
///
/// Uses `Y_{k,2} = S_k - min_{j=1..k-1} mean(S_{k-j}, ..., S_k)`, where each
/// mean is a slope between points `(m, S_m^(2))` of the iterated-sum graph,
/// so the minimum is a tangent query against an incrementally built hull.
pub fn y_left_all(path: &Path) -> Vec<f64> {
    let s = partial_sums(path);
    let mut v = Vec::with_capacity(s.len());
    let mut acc = 0.0;
    for &sk in &s {
        acc += sk;
        v.push(acc);
    }
    let n = path.len();
    let mut out = Vec::with_capacity(n);
    let mut hull = UpperHull::default();
    for k in 1..=n {
        if k == 1 {
            out.push(f64::NEG_INFINITY);
            continue;
        }
        // Points m = 0..=k-2 are (m, V_m) with V_m = S_0 + ... + S_m.
        hull.push(((k - 2) as f64, v[k - 2]));
        let q = (k as f64, v[k]);
        out.push(suffix_excess(s[k], q, hull.tangent_from(q)));
    }
    out
}

/// `Y_{k,n}` for every `k = 1..=n + 1` in `O(n log n)`, via the reversed path.
pub fn y_right_all(path: &Path) -> Vec<f64> {
    let n = path.len();
    let rev: Vec<f64> = path.increments().iter().rev().copied().collect();
    // Reversed partial sums R_0..R_n; Y_{k,n} = R_c - min mean(R_{c-j..c})
    // over j = 1..=c with c = n + 1 - k.
    let mut r = Vec::with_capacity(n + 1);
    r.push(0.0);
    for &x in &rev {
        r.push(r.last().unwrap() + x);
    }
    let mut w = Vec::with_capacity(n + 2);
    // w[m + 1] = R_0 + ... + R_m, with w[0] = 0 standing for m = -1.
    w.push(0.0);
    for &rm in &r {
        w.push(w.last().unwrap() + rm);
    }
    let mut by_c = vec![f64::NEG_INFINITY; n + 1];
    let mut hull = UpperHull::default();
    for c in 1..=n {
        hull.push(((c as f64) - 2.0, w[c - 1]));
        let q = (c as f64, w[c + 1]);
        by_c[c] = suffix_excess(r[c], q, hull.tangent_from(q));
    }
    (1..=n + 1).map(|k| by_c[n + 1 - k]).collect()
}

/// Half-open interval `(lo, hi]` of shifts `t` for which the first argmax of
/// `(j + 1) t + S_j^(2)` over `j in 0..=n` equals `k`. May be empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KInterval {
    pub k: usize,
    pub lo: f64,
    pub hi: f64,
}

impl KInterval {
    pub fn contains(&self, t: f64) -> bool {
        self.lo < t && t <= self.hi
    }
}

fn pos(y: f64) -> f64 {
    // (-inf)^+ = 0
    y.max(0.0)
}

/// Interval for a single `k in 0..=n`, `O(n)`.
pub fn k_interval(path: &Path, k: usize) -> Result<KInterval> {
    let n = path.len();
    check_range(k, 0, n)?;
    let s = partial_sums(path);
    let lo = if k == 0 {
        f64::NEG_INFINITY
    } else {
        -s[k] + pos(y_left(path, k)?)
    };
    let hi = if k == n {
        f64::INFINITY
    } else {
        -path.x(k + 1) - s[k] - pos(y_right(path, k + 2)?)
    };
    Ok(KInterval { k, lo, hi })
}

/// All `n + 1` intervals in `O(n log n)`.
pub fn k_intervals(path: &Path) -> Vec<KInterval> {
    let n = path.len();
    let s = partial_sums(path);
    let left = y_left_all(path);
    let right = y_right_all(path);
    (0..=n)
        .map(|k| {
            let lo = if k == 0 {
                f64::NEG_INFINITY
            } else {
                -s[k] + pos(left[k - 1])
            };
            let hi = if k == n {
                f64::INFINITY
            } else {
                // right[i] holds Y_{i+1,n}; index k + 1 is Y_{k+2,n}.
                -path.x(k + 1) - s[k] - pos(right[k + 1])
            };
            KInterval { k, lo, hi }
        })
        .collect()
}

/// `𝒦_t`: first argmax over `j in 0..=n` of `(j + 1) t + S_j^(2)`.
pub fn shifted_argmax(iterated: &[f64], t: f64) -> usize {
    let shifted: Vec<f64> = iterated
        .iter()
        .enumerate()
        .map(|(j, v)| (j as f64 + 1.0) * t + v)
        .collect();
    first_argmax(&shifted).expect("iterated sums include S_0")
}

/// Proof functionals of a path of length `n`:
/// `A_{n-1} = max_{1<=k<=n-1} (-S_{k+1})`, `B_{n-1} = -max_{1<=k<=n-1} S_k`,
/// `m_n = -X_1 - (Y_{2,n})^+` and `M_n = -S_n + (Y_{n,2})^+`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathDiagnostics {
    /// Path length; `a` and `b` refer to index `n - 1`, so `a >= b` needs
    /// `n >= 3`.
    pub n: usize,
    pub a: f64,
    pub b: f64,
    pub m_lower: f64,
    pub m_upper: f64,
}

pub fn diagnostics(path: &Path) -> Result<PathDiagnostics> {
    let n = path.len();
    if n < 2 {
        return Err(Error::InvalidPath { min: 2, got: n });
    }
    let s = partial_sums(path);
    let a = (1..n).map(|k| -s[k + 1]).fold(f64::NEG_INFINITY, f64::max);
    let b = -(1..n).map(|k| s[k]).fold(f64::NEG_INFINITY, f64::max);
    let m_lower = -path.x(1) - pos(y_right(path, 2)?);
    let m_upper = -s[n] + pos(y_left(path, n)?);
    Ok(PathDiagnostics {
        n,
        a,
        b,
        m_lower,
        m_upper,
    })
}

/// `sum_{k=1}^{n-1} (X_{k+1})^- 1{Y_{k,2} < 0} 1{Y_{k+2,n} <= 0}`, the lower
/// bound on `A_{n-1} - B_{n-1}`.
pub fn indicator_sum(path: &Path) -> f64 {
    let n = path.len();
    let left = y_left_all(path);
    let right = y_right_all(path);
    (1..n)
        .filter(|&k| left[k - 1] < 0.0 && right[k + 1] <= 0.0)
        .map(|k| (-path.x(k + 1)).max(0.0))
        .sum()
}

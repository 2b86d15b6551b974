//! Exact persistence tables for Rademacher increments.
//!
//! `p_n = P(max_{1<=k<=n} T_k < 0)` (strict) and `p̄_n = P(max T_k <= 0)`
//! (weak), where `T_k` is `S_k` (order 1) or `S_k^(2)` (order 2).
//! Path counts are kept as big integers; `p_n = count_n / 2^n`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Order {
    One,
    Two,
}

impl From<Order> for u8 {
    fn from(o: Order) -> u8 {
        match o {
            Order::One => 1,
            Order::Two => 2,
        }
    }
}

impl TryFrom<u8> for Order {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Order::One),
            2 => Ok(Order::Two),
            _ => Err(Error::InvalidConfig(format!(
                "order must be 1 or 2, got {v}"
            ))),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", u8::from(*self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strictness {
    /// `max < y`
    Strict,
    /// `max <= y`
    Weak,
}

impl Strictness {
    pub fn survives(self, max: f64, y: f64) -> bool {
        match self {
            Strictness::Strict => max < y,
            Strictness::Weak => max <= y,
        }
    }
}

impl fmt::Display for Strictness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strictness::Strict => "strict",
            Strictness::Weak => "weak",
        })
    }
}

pub const ORDER1_MAX_N: usize = 512;
pub const ORDER2_MAX_N: usize = 128;

/// Exact persistence sequences `p_0..=p_{n_max}` and `p̄_0..=p̄_{n_max}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactTable {
    order: Order,
    strict_counts: Vec<BigUint>,
    weak_counts: Vec<BigUint>,
}

impl ExactTable {
    pub fn order(&self) -> Order {
        self.order
    }

    pub fn n_max(&self) -> usize {
        self.strict_counts.len() - 1
    }

    /// Number of the `2^n` sign paths that persist.
    pub fn count(&self, strictness: Strictness, n: usize) -> &BigUint {
        match strictness {
            Strictness::Strict => &self.strict_counts[n],
            Strictness::Weak => &self.weak_counts[n],
        }
    }

    pub fn prob(&self, strictness: Strictness, n: usize) -> BigRational {
        dyadic(self.count(strictness, n), n)
    }

    pub fn strict(&self, n: usize) -> BigRational {
        self.prob(Strictness::Strict, n)
    }

    pub fn weak(&self, n: usize) -> BigRational {
        self.prob(Strictness::Weak, n)
    }

    pub fn probs(&self, strictness: Strictness) -> Vec<BigRational> {
        (0..=self.n_max())
            .map(|n| self.prob(strictness, n))
            .collect()
    }

    pub fn prob_f64(&self, strictness: Strictness, n: usize) -> f64 {
        to_f64(&self.prob(strictness, n))
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n > self.n_max() {
            Err(Error::SizeOutOfRange {
                n,
                lo: 0,
                hi: self.n_max(),
            })
        } else {
            Ok(())
        }
    }

    /// `(sum_{k=0}^{m} a_k b_{m-k})_{m=0..=n}` for the chosen sequences.
    pub fn convolution(
        &self,
        left: Strictness,
        right: Strictness,
        n: usize,
    ) -> Result<Vec<BigRational>> {
        self.check_n(n)?;
        let a = self.probs(left);
        let b = self.probs(right);
        Ok(convolve(&a[..=n], &b[..=n]))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&ExactTableRecord::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str::<ExactTableRecord>(s)?.try_into()
    }

    /// `n,strict,weak` rows with decimal approximations.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,strict,weak\n");
        for n in 0..=self.n_max() {
            out.push_str(&format!(
                "{n},{:?},{:?}\n",
                self.prob_f64(Strictness::Strict, n),
                self.prob_f64(Strictness::Weak, n)
            ));
        }
        out
    }
}

/// `count / 2^n` reduced.
fn dyadic(count: &BigUint, n: usize) -> BigRational {
    BigRational::new(BigInt::from(count.clone()), BigInt::one() << n)
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn convolve(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let n = a.len().min(b.len());
    (0..n)
        .map(|m| (0..=m).fold(BigRational::zero(), |acc, k| acc + &a[k] * &b[m - k]))
        .collect()
}

fn check_size(n: usize, hi: usize) -> Result<()> {
    if n > hi {
        Err(Error::SizeOutOfRange { n, lo: 0, hi })
    } else {
        Ok(())
    }
}

/// Order-1 table by DP over `(k, S_k)`.
///
/// `n_max = 0` yields the trivial table `p_0 = p̄_0 = 1`.
pub fn order1_table(n_max: usize) -> Result<ExactTable> {
    check_size(n_max, ORDER1_MAX_N)?;
    let run = |floor: i64| -> Vec<BigUint> {
        // counts[d] = number of surviving paths with S_k = -d; S_k <= -floor.
        let mut counts = vec![BigUint::one()];
        let mut totals = vec![BigUint::one()];
        for _ in 1..=n_max {
            let mut next = vec![BigUint::zero(); counts.len() + 1];
            for (d, c) in counts.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                next[d + 1] += c;
                if d as i64 > floor {
                    next[d - 1] += c;
                }
            }
            totals.push(next.iter().sum());
            counts = next;
        }
        totals
    };
    Ok(ExactTable {
        order: Order::One,
        strict_counts: run(1),
        weak_counts: run(0),
    })
}

/// Order-2 table by DP over `(k, S_k, S_k^(2))` on the integer lattice.
pub fn order2_table(n_max: usize) -> Result<ExactTable> {
    check_size(n_max, ORDER2_MAX_N)?;
    Ok(ExactTable {
        order: Order::Two,
        strict_counts: order2_counts(n_max, 1),
        weak_counts: order2_counts(n_max, 0),
    })
}

/// Surviving-path counts with every `S_j^(2) <= -floor`.
///
/// Layer `k` is a dense grid indexed by `S_k + k` (rows) and `-S_k^(2)`
/// (columns, `0..=k(k+1)/2`); dead states are never stored.
fn order2_counts(n_max: usize, floor: i64) -> Vec<BigUint> {
    let mut totals = vec![BigUint::one()];
    // k = 0: S = 0, V = 0.
    let mut width = 1usize;
    let mut grid = vec![vec![BigUint::one()]];
    for k in 1..=n_max {
        let new_width = k * (k + 1) / 2 + 1;
        let mut next = vec![vec![BigUint::zero(); new_width]; 2 * k + 1];
        for (row, cells) in grid.iter().enumerate() {
            let s = row as i64 - (k as i64 - 1);
            for (col, c) in cells.iter().enumerate().take(width) {
                if c.is_zero() {
                    continue;
                }
                let v = -(col as i64);
                for step in [-1i64, 1] {
                    let s2 = s + step;
                    let v2 = v + s2;
                    if v2 <= -floor {
                        next[(s2 + k as i64) as usize][(-v2) as usize] += c;
                    }
                }
            }
        }
        totals.push(next.iter().flatten().sum());
        grid = next;
        width = new_width;
    }
    totals
}

/// `(2n - 1)!! / (2n)!!`, with value 1 at `n = 0`.
pub fn double_factorial_ratio(n: usize) -> BigRational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 1..=n {
        num *= BigInt::from(2 * i - 1);
        den *= BigInt::from(2 * i);
    }
    BigRational::new(num, den)
}

fn require_order(table: &ExactTable, order: Order) -> Result<()> {
    if table.order() != order {
        Err(Error::WrongOrder {
            expected: order.into(),
        })
    } else {
        Ok(())
    }
}

/// `sum_{k=0}^n p_k p̄_{n-k} - 1` for an order-1 table.
pub fn sparre_residual(table: &ExactTable, n: usize) -> Result<BigRational> {
    require_order(table, Order::One)?;
    let conv = table.convolution(Strictness::Strict, Strictness::Weak, n)?;
    Ok(&conv[n] - BigRational::one())
}

/// `max_{m<=n} |[x^m] P(x) P̄(x) (1 - x) - [m = 0]|` by truncated series
/// multiplication.
pub fn genfunc_residual(table: &ExactTable, n: usize) -> Result<BigRational> {
    require_order(table, Order::One)?;
    let product = table.convolution(Strictness::Strict, Strictness::Weak, n)?;
    let mut worst = BigRational::zero();
    for m in 0..=n {
        let mut coeff = product[m].clone();
        if m > 0 {
            coeff -= &product[m - 1];
        }
        if m == 0 {
            coeff -= BigRational::one();
        }
        let abs = if coeff < BigRational::zero() {
            -coeff
        } else {
            coeff
        };
        if abs > worst {
            worst = abs;
        }
    }
    Ok(worst)
}

/// `sum_{k=0}^n p_k^(2) p̄_{n-k}^(2)` for every `n` up to the argument.
pub fn convolution_sequence(table: &ExactTable, n: usize) -> Result<Vec<BigRational>> {
    require_order(table, Order::Two)?;
    table.convolution(Strictness::Strict, Strictness::Weak, n)
}

/// `E|S_n| = 2^-n sum_j |2j - n| C(n, j)` for Rademacher steps.
pub fn mean_abs_sn_rademacher(n: usize) -> BigRational {
    let mut binom = BigInt::one();
    let mut acc = BigInt::zero();
    for j in 0..=n {
        if j > 0 {
            binom = binom * BigInt::from(n - j + 1) / BigInt::from(j);
        }
        let dist = (2 * j as i64 - n as i64).abs();
        acc += &binom * BigInt::from(dist);
    }
    BigRational::new(acc, BigInt::one() << n)
}

pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Persistence probability by enumerating all `2^n` sign paths.
pub fn brute_force(order: Order, strictness: Strictness, n: usize) -> Result<BigRational> {
    check_size(n, BRUTE_FORCE_MAX_N)?;
    let mut survivors: u64 = 0;
    for mask in 0u64..(1u64 << n) {
        let (mut s, mut v) = (0i64, 0i64);
        let mut max = i64::MIN;
        for i in 0..n {
            s += if mask >> i & 1 == 1 { 1 } else { -1 };
            v += s;
            let value = match order {
                Order::One => s,
                Order::Two => v,
            };
            max = max.max(value);
        }
        let alive = n == 0
            || match strictness {
                Strictness::Strict => max < 0,
                Strictness::Weak => max <= 0,
            };
        if alive {
            survivors += 1;
        }
    }
    Ok(BigRational::new(
        BigInt::from(survivors),
        BigInt::one() << n,
    ))
}

/// JSON layout of a table: probabilities as `[numerator, e]` pairs meaning
/// `numerator / 2^e` in lowest terms, numerators as decimal strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExactTableRecord {
    pub order: Order,
    pub n_max: usize,
    pub strict: Vec<(String, u32)>,
    pub weak: Vec<(String, u32)>,
}

fn reduced_dyadic(count: &BigUint, n: usize) -> (String, u32) {
    if count.is_zero() {
        return ("0".into(), 0);
    }
    let twos = count.trailing_zeros().unwrap_or(0).min(n as u64) as usize;
    ((count >> twos).to_str_radix(10), (n - twos) as u32)
}

impl From<&ExactTable> for ExactTableRecord {
    fn from(t: &ExactTable) -> Self {
        let encode = |counts: &[BigUint]| {
            counts
                .iter()
                .enumerate()
                .map(|(n, c)| reduced_dyadic(c, n))
                .collect()
        };
        Self {
            order: t.order,
            n_max: t.n_max(),
            strict: encode(&t.strict_counts),
            weak: encode(&t.weak_counts),
        }
    }
}

impl TryFrom<ExactTableRecord> for ExactTable {
    type Error = Error;

    fn try_from(r: ExactTableRecord) -> Result<Self> {
        let decode = |pairs: &[(String, u32)]| -> Result<Vec<BigUint>> {
            if pairs.len() != r.n_max + 1 {
                return Err(Error::Serialization(format!(
                    "expected {} entries, found {}",
                    r.n_max + 1,
                    pairs.len()
                )));
            }
            pairs
                .iter()
                .enumerate()
                .map(|(n, (num, e))| {
                    let num = BigUint::parse_bytes(num.as_bytes(), 10)
                        .ok_or_else(|| Error::Serialization(format!("bad numerator `{num}`")))?;
                    let e = *e as usize;
                    if e > n {
                        return Err(Error::Serialization(format!(
                            "exponent {e} exceeds n = {n}"
                        )));
                    }
                    Ok(num << (n - e))
                })
                .collect()
        };
        Ok(ExactTable {
            order: r.order,
            strict_counts: decode(&r.strict)?,
            weak_counts: decode(&r.weak)?,
        })
    }
}

/// `true` when `r` has a power-of-two denominator no larger than `2^n`.
pub fn is_dyadic_at_most(r: &BigRational, n: usize) -> bool {
    let den = r.denom().magnitude();
    den.count_ones() == 1 && den.bits() <= n as u64 + 1
}

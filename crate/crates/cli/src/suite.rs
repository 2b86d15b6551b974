//! The acceptance battery. Each criterion returns a pass flag and a one-line
//! detail; a criterion also fails if it exceeds its runtime limit.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Zero;
use persistlab_core::bounds::{
    convolution_estimate, verify_lower_convolution, verify_two_sided, verify_upper_convolution,
    BoundInput, CertifiedC2,
};
use persistlab_core::distributions::{DecayParams, DistributionSpec, GridSpec};
use persistlab_core::exact::{
    brute_force, double_factorial_ratio, genfunc_residual, mean_abs_sn_rademacher, order1_table,
    order2_table, sparre_residual, to_f64,
};
use persistlab_core::gaussian::{
    ibm_slope, ibm_sweep, mckean_constant, mckean_constant_stirling, slepian_claims,
};
use persistlab_core::montecarlo::{
    ab_identity, fit_exponent, mean_abs_curve, partition_check, survival_curve, RunConfig,
};
use persistlab_core::rng::derive_seed;
use persistlab_core::{Order, Strictness};

use crate::record::{CriterionSummary, Payload, ResultRecord};

/// z-score limit for the Gaussian density-case check.
pub const DENSITY_Z: f64 = 3.0;
pub const GAUSSIAN_GAMMA: (f64, f64) = (0.20, 0.30);
pub const PARETO_GAMMA: (f64, f64) = (0.117, 0.217);
/// Joint standard errors allowed in the moment identity.
pub const MOMENT_Z: f64 = 4.0;
pub const IBM_SLOPE: (f64, f64) = (-0.30, -0.20);
pub const MCKEAN_VALUE: f64 = 0.096643;
pub const MCKEAN_AGREEMENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct SuiteOptions {
    pub seed: u64,
    pub workers: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            seed: 42,
            workers: 1,
        }
    }
}

type Outcome = Result<(bool, String), String>;

pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub limit: Duration,
    run: fn(&SuiteOptions) -> Outcome,
}

pub const CRITERIA: [Criterion; 12] = [
    Criterion {
        id: 1,
        name: "sparre-andersen",
        limit: Duration::from_secs(10),
        run: sparre,
    },
    Criterion {
        id: 2,
        name: "double-factorial-sandwich",
        limit: Duration::from_secs(10),
        run: sandwich,
    },
    Criterion {
        id: 3,
        name: "dp-vs-enumeration",
        limit: Duration::from_secs(120),
        run: enumeration,
    },
    Criterion {
        id: 4,
        name: "gaussian-density-case",
        limit: Duration::from_secs(120),
        run: density_case,
    },
    Criterion {
        id: 5,
        name: "persistence-exponents",
        limit: Duration::from_secs(1200),
        run: exponents,
    },
    Criterion {
        id: 6,
        name: "upper-bounds-exact",
        limit: Duration::from_secs(10),
        run: upper_exact,
    },
    Criterion {
        id: 7,
        name: "lower-convolution-mc",
        limit: Duration::from_secs(600),
        run: lower_mc,
    },
    Criterion {
        id: 8,
        name: "interval-partition",
        limit: Duration::from_secs(60),
        run: partition,
    },
    Criterion {
        id: 9,
        name: "moment-identity",
        limit: Duration::from_secs(60),
        run: moment,
    },
    Criterion {
        id: 10,
        name: "slepian-covariance",
        limit: Duration::from_secs(30),
        run: slepian,
    },
    Criterion {
        id: 11,
        name: "ibm-scaling",
        limit: Duration::from_secs(900),
        run: ibm,
    },
    Criterion {
        id: 12,
        name: "determinism",
        limit: Duration::from_secs(60),
        run: determinism,
    },
];

pub fn run_criterion(id: u8, opts: &SuiteOptions) -> Option<CriterionSummary> {
    let c = CRITERIA.iter().find(|c| c.id == id)?;
    let start = Instant::now();
    let outcome = (c.run)(opts);
    let elapsed = start.elapsed();
    let (ok, mut detail) = match outcome {
        Ok(pair) => pair,
        Err(e) => (false, format!("error: {e}")),
    };
    let in_time = elapsed <= c.limit;
    if !in_time {
        detail.push_str(&format!("; over the {}s limit", c.limit.as_secs()));
    }
    Some(CriterionSummary {
        id,
        name: c.name.to_string(),
        passed: ok && in_time,
        seconds: elapsed.as_secs_f64(),
        limit_seconds: c.limit.as_secs_f64(),
        detail,
    })
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn specs() -> [DistributionSpec; 4] {
    [
        DistributionSpec::rademacher(),
        DistributionSpec::gaussian(1.0).expect("valid"),
        DistributionSpec::laplace(1.0).expect("valid"),
        DistributionSpec::shifted_pareto(1.5).expect("valid"),
    ]
}

fn sparre(_: &SuiteOptions) -> Outcome {
    let table = order1_table(64).map_err(err)?;
    let bad: Vec<usize> = (0..=64)
        .filter(|&n| {
            !sparre_residual(&table, n)
                .map(|r| r.is_zero())
                .unwrap_or(false)
        })
        .collect();
    let detail = if bad.is_empty() {
        "residual 0 for every n <= 64".to_string()
    } else {
        format!("nonzero residual at n = {bad:?}")
    };
    Ok((bad.is_empty(), detail))
}

fn sandwich(_: &SuiteOptions) -> Outcome {
    let table = order1_table(64).map_err(err)?;
    let bad: Vec<usize> = (0..=64)
        .filter(|&n| {
            let b = double_factorial_ratio(n);
            !(table.strict(n) <= b && b <= table.weak(n))
        })
        .collect();
    let genfunc = genfunc_residual(&table, 64).map_err(err)?;
    Ok((
        bad.is_empty() && genfunc.is_zero(),
        format!("sandwich violations at n = {bad:?}; generating-function residual {genfunc} up to order 64"),
    ))
}

fn enumeration(_: &SuiteOptions) -> Outcome {
    let mut mismatches = vec![];
    for order in [Order::One, Order::Two] {
        let table = match order {
            Order::One => order1_table(16),
            Order::Two => order2_table(16),
        }
        .map_err(err)?;
        for strictness in [Strictness::Strict, Strictness::Weak] {
            for n in 0..=16 {
                if table.prob(strictness, n) != brute_force(order, strictness, n).map_err(err)? {
                    mismatches.push((order.to_string(), strictness.to_string(), n));
                }
            }
        }
    }
    Ok((
        mismatches.is_empty(),
        format!(
            "{} mismatches over both orders and strictness, n <= 16",
            mismatches.len()
        ),
    ))
}

fn density_case(o: &SuiteOptions) -> Outcome {
    let spec = DistributionSpec::gaussian(1.0).map_err(err)?;
    let cfg = RunConfig::new(spec, Order::One, 64)
        .paths(1_000_000)
        .seed(derive_seed(o.seed, 4))
        .workers(o.workers);
    let curve = survival_curve(&cfg).map_err(err)?;
    let mut ok = true;
    let mut parts = vec![];
    for n in [4, 16, 64] {
        let e = curve.estimate(Strictness::Strict, n).map_err(err)?;
        let target = to_f64(&double_factorial_ratio(n));
        let z = e.z_against(target);
        ok &= z <= DENSITY_Z;
        parts.push(format!("n={n}: {:.5} vs {target:.5} (z={z:.2})", e.value));
    }
    Ok((ok, parts.join(", ")))
}

fn gamma_of(spec: DistributionSpec, o: &SuiteOptions, label: u64) -> Result<(f64, f64), String> {
    let cfg = RunConfig::new(spec, Order::Two, 8192)
        .paths(100_000)
        .seed(derive_seed(o.seed, label))
        .workers(o.workers);
    let curve = survival_curve(&cfg).map_err(err)?;
    let pts = [64, 256, 1024, 4096, 8192]
        .iter()
        .map(|&n| curve.estimate(Strictness::Strict, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let fit = fit_exponent(&pts).map_err(err)?;
    Ok((fit.gamma, fit.stderr))
}

fn exponents(o: &SuiteOptions) -> Outcome {
    let (g, gse) = gamma_of(DistributionSpec::gaussian(1.0).map_err(err)?, o, 51)?;
    let (p, pse) = gamma_of(DistributionSpec::shifted_pareto(1.5).map_err(err)?, o, 52)?;
    let ok = (GAUSSIAN_GAMMA.0..=GAUSSIAN_GAMMA.1).contains(&g)
        && (PARETO_GAMMA.0..=PARETO_GAMMA.1).contains(&p);
    Ok((
        ok,
        format!("gaussian gamma = {g:.4} +- {gse:.4}; pareto(1.5) gamma = {p:.4} +- {pse:.4}"),
    ))
}

fn upper_exact(_: &SuiteOptions) -> Outcome {
    let table = order2_table(64).map_err(err)?;
    let conv = table
        .convolution(Strictness::Strict, Strictness::Weak, 64)
        .map_err(err)?;
    let c2 = CertifiedC2::for_spec(&DistributionSpec::rademacher()).map_err(err)?;
    let one = BoundInput::Exact(BigRational::from_integer(1.into()));
    let mut bad = vec![];
    for (n, c) in conv.iter().enumerate() {
        let m = BoundInput::Exact(mean_abs_sn_rademacher(n + 1));
        let up = verify_upper_convolution(n, &c.clone().into(), &m, &one, true).map_err(err)?;
        let (_, two) =
            verify_two_sided(n, &table.strict(n).into(), &m, &one, true, &c2).map_err(err)?;
        if !(up.holds && up.is_exact() && two.holds && two.is_exact()) {
            bad.push(n);
        }
    }
    Ok((
        bad.is_empty(),
        format!("{} of 65 n values fail an exact upper bound", bad.len()),
    ))
}

fn lower_mc(o: &SuiteOptions) -> Outcome {
    let spec = DistributionSpec::laplace(1.0).map_err(err)?;
    let params = DecayParams::new(&spec, 2.0, 0.0, 3.0, 1.0).map_err(err)?;
    let c2 = CertifiedC2::certify(&spec, &params, &GridSpec::default()).map_err(err)?;
    let ns = [4usize, 8, 16, 32, 64, 128];
    let cfg = RunConfig::new(spec, Order::Two, 128)
        .paths(1_000_000)
        .seed(derive_seed(o.seed, 71))
        .workers(o.workers);
    let curve = survival_curve(&cfg).map_err(err)?;
    let strict = (0..=128)
        .map(|n| curve.estimate(Strictness::Strict, n))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let shifted: Vec<usize> = ns.iter().map(|n| n + 1).collect();
    let abs_cfg = RunConfig {
        seed: derive_seed(o.seed, 72),
        ..cfg.clone()
    };
    let mean_abs = mean_abs_curve(&abs_cfg, &shifted).map_err(err)?;
    let x = BoundInput::known(spec.mean_abs());
    let mut ok = c2.value == 4.0;
    let mut worst = f64::INFINITY;
    for (&n, m) in ns.iter().zip(&mean_abs) {
        let conv = convolution_estimate(&strict, &strict, n).map_err(err)?;
        let r = verify_lower_convolution(n, &conv, &m.into(), &x, &c2).map_err(err)?;
        ok &= r.holds;
        worst = worst.min((r.margin + r.allowance) / r.rhs);
    }
    Ok((
        ok,
        format!(
            "c2 = {}; smallest (margin + allowance) / rhs = {worst:.3}",
            c2.value
        ),
    ))
}

fn partition(o: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for (i, spec) in specs().iter().enumerate() {
        let rep =
            partition_check(spec, 1000, 100, derive_seed(o.seed, 80 + i as u64)).map_err(err)?;
        ok &= rep.clean() && rep.pairs >= 10_000;
        parts.push(format!(
            "{spec}: {} pairs, {} mismatches, {}/{} inequality violations",
            rep.pairs, rep.mismatches, rep.sum_indicator_violations, rep.lower_diff_violations
        ));
    }
    Ok((ok, parts.join("; ")))
}

fn moment(o: &SuiteOptions) -> Outcome {
    let mut ok = true;
    let mut parts = vec![];
    for (i, spec) in specs().iter().enumerate() {
        for n in [8, 32] {
            let ab = ab_identity(
                spec,
                n,
                100_000,
                derive_seed(o.seed, 90 + i as u64),
                o.workers,
            )
            .map_err(err)?;
            ok &= ab.z <= MOMENT_Z;
            parts.push(format!("{spec} n={n}: z={:.2}", ab.z));
        }
    }
    Ok((ok, parts.join(", ")))
}

fn slepian(_: &SuiteOptions) -> Outcome {
    let rep = slepian_claims(512).map_err(err)?;
    Ok((
        rep.holds(),
        format!(
            "{} pairs: {} diagonal failures, {} below one, {} decreasing",
            rep.pairs,
            rep.diagonal_failures.len(),
            rep.below_one.len(),
            rep.decreasing.len()
        ),
    ))
}

fn ibm(o: &SuiteOptions) -> Outcome {
    let sweep = ibm_sweep(
        &[16.0, 64.0, 256.0, 1024.0],
        0.01,
        100_000,
        derive_seed(o.seed, 11),
        o.workers,
    )
    .map_err(err)?;
    let (slope, se) = ibm_slope(&sweep).map_err(err)?;
    let (c, c2) = (mckean_constant(), mckean_constant_stirling());
    let ok = (IBM_SLOPE.0..=IBM_SLOPE.1).contains(&slope)
        && (c - c2).abs() <= MCKEAN_AGREEMENT
        && (c - MCKEAN_VALUE).abs() < 5e-7;
    Ok((
        ok,
        format!(
            "slope = {slope:.4} +- {se:.4}; mckean = {c:.12} (|diff| = {:.1e})",
            (c - c2).abs()
        ),
    ))
}

/// Payload lines of `mc --json` for the given worker count.
pub fn mc_payloads(extra: &[&str], workers: usize) -> Result<Vec<String>, String> {
    let mut args: Vec<String> = ["persistlab", "mc", "--json"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    args.push("--workers".into());
    args.push(workers.to_string());
    let mut out = vec![];
    let mut errs = vec![];
    let code = crate::run(args, &mut out, &mut errs);
    if code != 0 {
        return Err(String::from_utf8_lossy(&errs).into_owned());
    }
    String::from_utf8(out)
        .map_err(err)?
        .lines()
        .map(|l| {
            let rec = ResultRecord::from_line(l).map_err(err)?;
            match rec.payload {
                p @ Payload::Estimate(_) => serde_json::to_string(&p).map_err(err),
                other => Err(format!("unexpected payload {other:?}")),
            }
        })
        .collect()
}

fn determinism(o: &SuiteOptions) -> Outcome {
    let seed = o.seed.to_string();
    let runs: [&[&str]; 2] = [
        &[
            "--dist",
            "gaussian:1",
            "--order",
            "2",
            "--n",
            "64..8192",
            "--paths",
            "100000",
            "--seed",
            &seed,
        ],
        &[
            "--dist",
            "rademacher",
            "--order",
            "2",
            "--n",
            "3",
            "--paths",
            "1000000",
            "--seed",
            &seed,
        ],
    ];
    let mut ok = true;
    let mut lines = 0;
    for extra in runs {
        let base = mc_payloads(extra, 1)?;
        lines += base.len();
        for w in [4, 8] {
            ok &= mc_payloads(extra, w)? == base;
        }
    }
    Ok((
        ok,
        format!("{lines} payload lines compared across workers 1, 4, 8"),
    ))
}

use std::fmt::Write as _;
use std::io::Write;

use num_rational::BigRational;
use persistlab_core::bounds::{
    convolution_estimate, verify_lower_convolution, verify_two_sided, verify_upper_convolution,
    BoundInput, BoundReport, CertifiedC2,
};
use persistlab_core::distributions::{check_decay, DecayParams, DistributionSpec, GridSpec, Law};
use persistlab_core::exact::{
    double_factorial_ratio, genfunc_residual, mean_abs_sn_rademacher, order1_table, order2_table,
    sparre_residual, ExactTable,
};
use persistlab_core::gaussian::{ibm_slope, ibm_sweep, mckean_constant};
use persistlab_core::montecarlo::{
    fit_exponent, mean_abs_curve, survival_curve, Estimate, RunConfig,
};
use persistlab_core::rng::derive_seed;
use persistlab_core::{Order, Strictness};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::args::{
    BoundsArgs, DecayArgs, DecayOverride, ExactArgs, FitArgs, IbmArgs, McArgs, Output, Statistic,
    SuiteArgs,
};
use crate::error::CliError;
use crate::record::{append_records, read_estimates, Payload, ResultRecord, TableDigest};
use crate::suite;

type Result<T> = std::result::Result<T, CliError>;

fn emit(out: &mut dyn Write, o: &Output, records: &[ResultRecord], text: &str) -> Result<()> {
    if o.json {
        for r in records {
            writeln!(out, "{}", r.to_line())?;
        }
    } else {
        out.write_all(text.as_bytes())?;
    }
    if let Some(path) = &o.out {
        append_records(path, records)?;
    }
    Ok(())
}

fn write_csv(o: &Output, header: &str, rows: &[String]) -> Result<()> {
    if let Some(path) = &o.csv {
        let mut body = String::from(header);
        body.push('\n');
        for r in rows {
            body.push_str(r);
            body.push('\n');
        }
        std::fs::write(path, body)?;
    }
    Ok(())
}

fn table_digest(table: &ExactTable, identities_hold: Option<bool>) -> Result<TableDigest> {
    let n = table.n_max();
    Ok(TableDigest {
        order: table.order(),
        n_max: n,
        sha256: hex::encode(Sha256::digest(table.to_json()?.as_bytes())),
        last: (table.strict(n).to_string(), table.weak(n).to_string()),
        identities_hold,
    })
}

pub fn cmd_exact(args: &ExactArgs, out: &mut dyn Write) -> Result<()> {
    let order: Order = args.order.into();
    let table = match order {
        Order::One => order1_table(args.n)?,
        Order::Two => order2_table(args.n)?,
    };
    let mut text = format!(
        "order {order} exact table, n = 0..={}\nn,strict,weak\n",
        args.n
    );
    for n in 0..=args.n {
        writeln!(text, "{n},{},{}", table.strict(n), table.weak(n)).unwrap();
    }
    let mut failures = vec![];
    let identities = if order == Order::One {
        let sparre_bad: Vec<usize> = (0..=args.n)
            .filter(|&n| {
                sparre_residual(&table, n)
                    .map(|r| r != BigRational::from_integer(0.into()))
                    .unwrap_or(true)
            })
            .collect();
        let genfunc = genfunc_residual(&table, args.n)?;
        let sandwich_bad: Vec<usize> = (0..=args.n)
            .filter(|&n| {
                let bound = double_factorial_ratio(n);
                !(table.strict(n) <= bound && bound <= table.weak(n))
            })
            .collect();
        let status = |bad: &[usize]| {
            if bad.is_empty() {
                "0".to_string()
            } else {
                format!("nonzero at n = {bad:?}")
            }
        };
        writeln!(
            text,
            "sparre residual: {} (n <= {})",
            status(&sparre_bad),
            args.n
        )
        .unwrap();
        writeln!(
            text,
            "generating-function residual: {genfunc} (orders <= {})",
            args.n
        )
        .unwrap();
        writeln!(
            text,
            "sandwich p_n <= (2n-1)!!/(2n)!! <= pbar_n: {}",
            if sandwich_bad.is_empty() {
                "holds".to_string()
            } else {
                format!("fails at n = {sandwich_bad:?}")
            }
        )
        .unwrap();
        if !sparre_bad.is_empty() {
            failures.push("sparre residual");
        }
        if genfunc != BigRational::from_integer(0.into()) {
            failures.push("generating-function residual");
        }
        if !sandwich_bad.is_empty() {
            failures.push("sandwich");
        }
        Some(failures.is_empty())
    } else {
        None
    };
    if let Some(path) = &args.table {
        std::fs::write(path, table.to_json()?)?;
    }
    if let Some(path) = &args.output.csv {
        std::fs::write(path, table.to_csv())?;
    }
    let config = json!({ "order": u8::from(order), "n": args.n });
    let record = ResultRecord::new(
        "exact",
        config,
        Payload::ExactTable(table_digest(&table, identities)?),
    );
    emit(out, &args.output, &[record], &text)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failures.join(", ")))
    }
}

pub fn cmd_mc(args: &McArgs, out: &mut dyn Write) -> Result<()> {
    let ns = &args.n.0;
    let n_max = *ns.iter().max().expect("non-empty list");
    let s = &args.sampling;
    let cfg = RunConfig {
        spec: args.dist,
        order: args.order.into(),
        strictness: args.strictness.into(),
        threshold: args.y,
        n: n_max,
        paths: s.paths,
        seed: s.seed,
        workers: s.workers,
        budget: s.budget,
    };
    cfg.validate()?;
    let mut notes = String::new();
    let estimates: Vec<Estimate> = match args.stat {
        Statistic::Persistence => {
            let curve = survival_curve(&cfg)?;
            if curve.ties > 0 && args.dist.has_density() {
                writeln!(notes, "note: {} paths touched y exactly", curve.ties).unwrap();
            }
            ns.iter()
                .map(|&n| curve.estimate(cfg.strictness, n))
                .collect::<std::result::Result<_, _>>()?
        }
        Statistic::MeanAbs => mean_abs_curve(&cfg, ns)?,
    };
    let stat = match args.stat {
        Statistic::Persistence => "persistence",
        Statistic::MeanAbs => "mean-abs",
    };
    let mut text = format!(
        "{stat} {} order {} {} y = {}\nn,value,stderr,paths\n",
        args.dist, cfg.order, cfg.strictness, cfg.threshold
    );
    let mut rows = vec![];
    let mut records = vec![];
    for e in &estimates {
        writeln!(text, "{},{},{},{}", e.n, e.value, e.stderr, e.paths).unwrap();
        rows.push(format!("{},{},{}", e.n, e.value, e.stderr));
        let config = json!({
            "dist": args.dist.to_string(),
            "order": u8::from(cfg.order),
            "strictness": cfg.strictness.to_string(),
            "y": cfg.threshold,
            "n": e.n,
            "paths": s.paths,
            "seed": s.seed,
            "workers": s.workers,
            "stat": stat,
        });
        records.push(ResultRecord::new(
            "mc",
            config,
            Payload::Estimate(e.clone()),
        ));
    }
    text.push_str(&notes);
    write_csv(&args.output, "n,value,stderr", &rows)?;
    emit(out, &args.output, &records, &text)
}

pub fn cmd_fit(args: &FitArgs, out: &mut dyn Write) -> Result<()> {
    let points = read_estimates(&args.input)?;
    let fit = fit_exponent(&points)?;
    let text = format!(
        "gamma = {} +- {}\nused n = {:?}\nexcluded n = {:?}\n",
        fit.gamma, fit.stderr, fit.used, fit.excluded
    );
    write_csv(
        &args.output,
        "gamma,stderr",
        &[format!("{},{}", fit.gamma, fit.stderr)],
    )?;
    let config = json!({ "input": args.input.display().to_string(), "points": points.len() });
    emit(
        out,
        &args.output,
        &[ResultRecord::new("fit", config, Payload::Fit(fit))],
        &text,
    )
}

fn decay_params(spec: &DistributionSpec, o: &DecayOverride) -> Result<DecayParams> {
    let base = spec.certified_decay_params().ok();
    let pick = |v: Option<f64>, d: Option<f64>, name: &str| {
        v.or(d)
            .ok_or_else(|| CliError::Usage(format!("no default {name} for {spec}; pass --{name}")))
    };
    Ok(DecayParams::new(
        spec,
        pick(o.k, base.map(|b| b.k), "K")?,
        pick(o.l, base.map(|b| b.l), "L")?,
        pick(o.theta, base.map(|b| b.theta), "theta")?,
        pick(o.r, base.map(|b| b.r), "r")?,
    )?)
}

fn bound_rows(reports: &[BoundReport]) -> (String, Vec<String>) {
    let mut text = String::from("inequality,n,lhs,rhs,margin,holds\n");
    let mut rows = vec![];
    for r in reports {
        let row = format!(
            "{},{},{},{},{},{}",
            r.inequality, r.n, r.lhs, r.rhs, r.margin, r.holds
        );
        text.push_str(&row);
        text.push('\n');
        rows.push(row);
    }
    (text, rows)
}

pub fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<()> {
    let spec = args.dist;
    let params = decay_params(&spec, &args.decay)?;
    let c2 = CertifiedC2::certify(&spec, &params, &GridSpec::default())?;
    let symmetric = spec.is_symmetric();
    let n_max = *args.n.0.iter().max().expect("non-empty list");
    let s = &args.sampling;
    let mut reports = vec![];
    if args.exact {
        if spec.law() != Law::Rademacher {
            return Err(CliError::Usage("--exact needs --dist rademacher".into()));
        }
        let table = order2_table(n_max)?;
        let weak_conv = table.convolution(Strictness::Strict, Strictness::Weak, n_max)?;
        let strict_conv = table.convolution(Strictness::Strict, Strictness::Strict, n_max)?;
        let x = BoundInput::Exact(BigRational::from_integer(1.into()));
        for n in 0..=n_max {
            let mean_abs = BoundInput::Exact(mean_abs_sn_rademacher(n + 1));
            reports.push(verify_upper_convolution(
                n,
                &weak_conv[n].clone().into(),
                &mean_abs,
                &x,
                symmetric,
            )?);
            reports.push(verify_lower_convolution(
                n,
                &strict_conv[n].clone().into(),
                &mean_abs,
                &x,
                &c2,
            )?);
            let (lo, hi) =
                verify_two_sided(n, &table.strict(n).into(), &mean_abs, &x, symmetric, &c2)?;
            reports.push(lo);
            reports.push(hi);
        }
    } else {
        let cfg = RunConfig {
            spec,
            order: Order::Two,
            strictness: Strictness::Strict,
            threshold: 0.0,
            n: n_max,
            paths: s.paths,
            seed: s.seed,
            workers: s.workers,
            budget: s.budget,
        };
        let curve = survival_curve(&cfg)?;
        let strict: Vec<Estimate> = (0..=n_max)
            .map(|n| curve.estimate(Strictness::Strict, n))
            .collect::<std::result::Result<_, _>>()?;
        let weak: Vec<Estimate> = (0..=n_max)
            .map(|n| curve.estimate(Strictness::Weak, n))
            .collect::<std::result::Result<_, _>>()?;
        let shifted: Vec<usize> = args.n.0.iter().map(|n| n + 1).collect();
        let mut abs_cfg = cfg.clone();
        abs_cfg.seed = derive_seed(s.seed, 1);
        let mean_abs = mean_abs_curve(&abs_cfg, &shifted)?;
        let x = BoundInput::known(spec.mean_abs());
        for (&n, m) in args.n.0.iter().zip(&mean_abs) {
            let m: BoundInput = m.into();
            reports.push(verify_upper_convolution(
                n,
                &convolution_estimate(&strict, &weak, n)?,
                &m,
                &x,
                symmetric,
            )?);
            reports.push(verify_lower_convolution(
                n,
                &convolution_estimate(&strict, &strict, n)?,
                &m,
                &x,
                &c2,
            )?);
            let (lo, hi) = verify_two_sided(n, &(&strict[n]).into(), &m, &x, symmetric, &c2)?;
            reports.push(lo);
            reports.push(hi);
        }
    }
    let (mut text, rows) = bound_rows(&reports);
    let failed = reports.iter().filter(|r| !r.holds).count();
    writeln!(
        text,
        "c2 = {}; {} of {} rows hold",
        c2.value,
        reports.len() - failed,
        reports.len()
    )
    .unwrap();
    write_csv(&args.output, "inequality,n,lhs,rhs,margin,holds", &rows)?;
    let config = json!({
        "dist": spec.to_string(),
        "exact": args.exact,
        "n": args.n.0,
        "K": params.k, "L": params.l, "theta": params.theta, "r": params.r,
        "paths": s.paths, "seed": s.seed, "workers": s.workers,
    });
    let records: Vec<ResultRecord> = reports
        .into_iter()
        .map(|r| ResultRecord::new("bounds", config.clone(), Payload::Bound(r)))
        .collect();
    emit(out, &args.output, &records, &text)?;
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{failed} bound rows fail")))
    }
}

pub fn cmd_decay(args: &DecayArgs, out: &mut dyn Write) -> Result<()> {
    let spec = args.dist;
    let params = decay_params(&spec, &args.decay)?;
    let grid = GridSpec {
        lo: args.lo,
        hi: args.hi,
        points: args.points,
        logarithmic: !args.linear,
    };
    let report = check_decay(&spec, &params, &grid)?;
    let text = format!(
        "{spec}: K = {}, L = {}, theta = {}, r = {}, alpha = {}\nmax violation: {:e}\nworst gap {:e} at (t, s) = ({}, {})\nviolations: {} of {}\n",
        params.k,
        params.l,
        params.theta,
        params.r,
        params.alpha,
        report.max_violation.max(0.0),
        report.max_violation,
        report.worst_t,
        report.worst_s,
        report.violations,
        args.points * args.points,
    );
    write_csv(
        &args.output,
        "dist,K,L,theta,r,max_violation,violations",
        &[format!(
            "{spec},{},{},{},{},{},{}",
            params.k, params.l, params.theta, params.r, report.max_violation, report.violations
        )],
    )?;
    let holds = report.holds();
    let config = json!({
        "dist": spec.to_string(),
        "K": params.k, "L": params.l, "theta": params.theta, "r": params.r,
        "lo": args.lo, "hi": args.hi, "points": args.points, "logarithmic": !args.linear,
    });
    emit(
        out,
        &args.output,
        &[ResultRecord::new("decay", config, Payload::Decay(report))],
        &text,
    )?;
    if holds {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "decay condition fails for {spec}"
        )))
    }
}

pub fn cmd_ibm(args: &IbmArgs, out: &mut dyn Write) -> Result<()> {
    let s = &args.sampling;
    let sweep = ibm_sweep(&args.t, args.dt, s.paths, s.seed, s.workers)?;
    let mut text = format!(
        "IBM persistence P(max Y <= 1), dt = {}\nT,steps,estimate,stderr\n",
        args.dt
    );
    let mut rows = vec![];
    let mut records = vec![];
    for (t, e) in args.t.iter().zip(&sweep) {
        writeln!(text, "{t},{},{},{}", e.n, e.value, e.stderr).unwrap();
        rows.push(format!("{t},{},{}", e.value, e.stderr));
        let config = json!({ "T": t, "dt": args.dt, "paths": s.paths, "seed": s.seed, "workers": s.workers });
        records.push(ResultRecord::new(
            "ibm",
            config,
            Payload::Estimate(e.clone()),
        ));
    }
    if let Ok((slope, se)) = ibm_slope(&sweep) {
        writeln!(text, "log-log slope: {slope} +- {se}").unwrap();
    }
    writeln!(text, "McKean constant: {}", mckean_constant()).unwrap();
    write_csv(&args.output, "T,estimate,stderr", &rows)?;
    emit(out, &args.output, &records, &text)
}

pub fn cmd_suite(args: &SuiteArgs, out: &mut dyn Write) -> Result<()> {
    let opts = suite::SuiteOptions {
        seed: args.seed,
        workers: args.workers,
    };
    let ids: Vec<u8> = if args.only.is_empty() {
        (1..=12).collect()
    } else {
        args.only.clone()
    };
    let mut results = vec![];
    for id in ids {
        let r = suite::run_criterion(id, &opts)
            .ok_or_else(|| CliError::Usage(format!("no criterion {id}")))?;
        results.push(r);
    }
    let mut text = String::from("id,name,passed,seconds,limit_seconds,detail\n");
    let mut rows = vec![];
    let mut records = vec![];
    for r in &results {
        let row = format!(
            "{},{},{},{:.3},{},\"{}\"",
            r.id,
            r.name,
            if r.passed { "PASS" } else { "FAIL" },
            r.seconds,
            r.limit_seconds,
            r.detail.replace('"', "'")
        );
        text.push_str(&row);
        text.push('\n');
        rows.push(row);
        let config = json!({ "id": r.id, "seed": args.seed, "workers": args.workers });
        records.push(ResultRecord::new(
            "suite",
            config,
            Payload::Criterion(r.clone()),
        ));
    }
    let failed: Vec<u8> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    write_csv(
        &args.output,
        "id,name,passed,seconds,limit_seconds,detail",
        &rows,
    )?;
    emit(out, &args.output, &records, &text)?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "criteria {failed:?} failed"
        )))
    }
}

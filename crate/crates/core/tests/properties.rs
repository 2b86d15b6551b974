use persistlab_core::distributions::DistributionSpec;
use persistlab_core::exact::{mean_abs_sn_rademacher, order1_table, order2_table};
use persistlab_core::montecarlo::Welford;
use persistlab_core::rng::path_stream;

fn all_specs() -> Vec<DistributionSpec> {
    vec![
        DistributionSpec::rademacher(),
        DistributionSpec::gaussian(1.0).unwrap(),
        DistributionSpec::gaussian(2.5).unwrap(),
        DistributionSpec::laplace(1.0).unwrap(),
        DistributionSpec::laplace(0.5).unwrap(),
        DistributionSpec::shifted_pareto(1.5).unwrap(),
    ]
}

#[test]
fn sample_moments_match() {
    for (i, spec) in all_specs().into_iter().enumerate() {
        let mut rng = path_stream(100 + i as u64, 0);
        let (mut x, mut a) = (Welford::default(), Welford::default());
        for _ in 0..1_000_000 {
            let v = spec.sample(&mut rng);
            x.push(v);
            a.push(v.abs());
        }
        assert!(
            x.mean().abs() <= 4.0 * x.stderr(),
            "{spec}: mean {} se {}",
            x.mean(),
            x.stderr()
        );
        let target = spec.mean_abs();
        assert!(
            (a.mean() - target).abs() <= 4.0 * a.stderr(),
            "{spec}: |x| {} vs {target}",
            a.mean()
        );
    }
}

#[test]
fn pareto_inverse_transform() {
    let alpha = 1.5;
    let spec = DistributionSpec::shifted_pareto(alpha).unwrap();
    let m = alpha / (alpha - 1.0);
    let mut rng = path_stream(7, 0);
    let mut xs: Vec<f64> = (0..100_000).map(|_| spec.sample(&mut rng)).collect();
    xs.sort_by(f64::total_cmp);
    let cdf = |x: f64| {
        if x + m <= 1.0 {
            0.0
        } else {
            1.0 - (x + m).powf(-alpha)
        }
    };
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < 0.01, "Kolmogorov distance {d}");
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn tail_integral_matches_quadrature() {
    // intervals avoid the Rademacher jump at 1 and the Pareto kink at 2
    for spec in all_specs() {
        for &(t, h) in &[(0.05, 0.3), (0.2, 0.7), (2.5, 1.5), (5.0, 4.0)] {
            let lhs = spec.tail_integral(t) - spec.tail_integral(t + h);
            let rhs = simpson(|u| spec.lower_tail(u), t, t + h, 4000);
            assert!(
                (lhs - rhs).abs() < 1e-8,
                "{spec} [{t}, {}]: {lhs} vs {rhs}",
                t + h
            );
        }
    }
}

#[test]
fn lower_tail_is_monotone() {
    for spec in all_specs() {
        let grid: Vec<f64> = (0..2000).map(|i| i as f64 * 0.01).collect();
        for w in grid.windows(2) {
            assert!(
                spec.lower_tail(w[1]) <= spec.lower_tail(w[0]),
                "{spec} at {}",
                w[1]
            );
        }
    }
}

#[test]
fn exact_mean_abs_is_monotone() {
    let values: Vec<_> = (0..=64).map(mean_abs_sn_rademacher).collect();
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn exact_tables_are_monotone() {
    for table in [order1_table(128).unwrap(), order2_table(64).unwrap()] {
        for n in 0..=table.n_max() {
            assert!(table.strict(n) <= table.weak(n));
            if n > 0 {
                assert!(table.strict(n) <= table.strict(n - 1));
                assert!(table.weak(n) <= table.weak(n - 1));
            }
        }
    }
}

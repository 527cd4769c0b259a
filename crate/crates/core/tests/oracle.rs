use approx::assert_relative_eq;
use pareto_lab::dominance::{dominance_counts, Strategy};
use pareto_lab::oracle::*;
use pareto_lab::region::BoxRegion;
use pareto_lab::sampling::{sample_uniform, StreamSpec};

/// Mean and standard error of `K^(r)` over `reps` simulated samples.
fn monte_carlo_layer(n: usize, d: usize, r: usize, reps: u64, seed: u64) -> (f64, f64) {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for i in 0..reps {
        let sample = sample_uniform(n, d, StreamSpec::new(seed, i)).unwrap();
        let summary = dominance_counts(sample.view(), Strategy::AxisPruned);
        let v = summary.layers().layer(r) as f64;
        sum += v;
        sum_sq += v * v;
    }
    let reps = reps as f64;
    let mean = sum / reps;
    let var = (sum_sq - reps * mean * mean) / (reps - 1.0);
    (mean, (var / reps).sqrt())
}

/// `n` at which the second critical dimension equals `d` exactly.
fn n_at_starstar(d: f64) -> f64 {
    let (mut lo, mut hi) = (3f64.ln(), 700.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if critical_dim_starstar(mid.exp(), 0.0).unwrap() < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn quadrature_matches_exact_alternating_sum() {
    for n in 2..=60u64 {
        for d in 1..=12 {
            let quad = expected_K_r(n, d, 0).unwrap();
            let exact = alternating_sum(n, d, 0).unwrap();
            assert_relative_eq!(quad, exact, max_relative = 1e-6);
            let quad_np = expected_nonpareto(n, d).unwrap();
            let exact_np = alternating_sum_nonpareto(n, d).unwrap();
            assert_relative_eq!(quad_np, exact_np, max_relative = 1e-6);
        }
    }
}

#[test]
fn quadrature_matches_monte_carlo() {
    for (k, &(n, d)) in [(2usize, 3usize), (5, 2), (8, 5), (12, 3)]
        .iter()
        .enumerate()
    {
        let reps = if n <= 8 { 1_000_000 } else { 200_000 };
        for r in 0..=2.min(n - 1) {
            let (mean, se) = monte_carlo_layer(n, d, r, reps, 900 + k as u64);
            let want = expected_K_r(n as u64, d, r as u64).unwrap();
            assert!(
                (mean - want).abs() <= 4.0 * se.max(1e-12),
                "n={n} d={d} r={r}: simulated {mean} +- {se}, exact {want}"
            );
        }
    }
}

#[test]
fn layer_expectations_sum_to_n() {
    for n in 1..=60u64 {
        for d in 1..=12 {
            let total: f64 = (0..n).map(|r| expected_K_r(n, d, r).unwrap()).sum();
            assert_relative_eq!(total, n as f64, max_relative = 1e-8);
        }
    }
}

#[test]
fn first_critical_dimension_identity() {
    for n in [3.0, 100.0, 2000.0, 1e6] {
        for c in [-1.0, 0.0, 0.37, 2.0] {
            let d = critical_dim_star(n, c).unwrap();
            let n_sq = n * n * (-d).exp2();
            assert_relative_eq!(n_sq, limit_nonpareto_mean(c), max_relative = 1e-12);
            let pairs = n * (n - 1.0) * (-d).exp2();
            assert_relative_eq!(
                pairs,
                (1.0 - 1.0 / n) * limit_nonpareto_mean(c),
                max_relative = 1e-12
            );
        }
    }
}

#[test]
fn nonpareto_mean_decreases_in_dimension() {
    for n in [2u64, 5, 60, 2000] {
        let values: Vec<f64> = (1..=40)
            .map(|d| expected_nonpareto(n, d).unwrap())
            .collect();
        assert!(strictly_decreasing(&values), "n = {n}: {values:?}");
    }
}

#[test]
fn nonpareto_mean_approaches_poisson_limit() {
    // n = 2^(d/2) puts d exactly on the first critical dimension (c = 0).
    let gaps: Vec<f64> = [20, 24, 28, 32, 36, 40]
        .iter()
        .map(|&d| {
            let n = 1u64 << (d / 2);
            (expected_nonpareto(n, d).unwrap() - limit_nonpareto_mean(0.0)).abs()
        })
        .collect();
    assert!(strictly_decreasing(&gaps), "{gaps:?}");
    assert!(gaps[5] < 0.03);
}

#[test]
fn stirling_factor_approaches_limit() {
    let gaps: Vec<f64> = [20.0, 40.0, 60.0, 80.0, 120.0]
        .iter()
        .map(|&d| {
            let n = n_at_starstar(d);
            let c = RegimeOffset::new(n, d as usize)
                .unwrap()
                .c_starstar
                .unwrap();
            let limit = (0.5 - c).exp() / (2.0 * std::f64::consts::PI).sqrt();
            (stirling_factor(n, d as usize).unwrap() / limit - 1.0).abs()
        })
        .collect();
    assert!(strictly_decreasing(&gaps), "{gaps:?}");
}

#[test]
fn layer_means_approach_limit() {
    for r in [2u64, 3] {
        let mut ratio_gaps = Vec::new();
        for d in [20usize, 30, 40, 50] {
            let n = n_at_starstar(d as f64).round();
            let c = RegimeOffset::new(n, d).unwrap().c_starstar.unwrap();
            let exact = expected_K_r(n as u64, d, r).unwrap();
            ratio_gaps.push((exact / limit_EKr(r, c).unwrap() - 1.0).abs());
        }
        assert!(strictly_decreasing(&ratio_gaps), "r = {r}: {ratio_gaps:?}");
    }
}

#[test]
fn oracle_report_examples() {
    let cube = BoxRegion::unit(1);
    let report = OracleReport::fixed(2, 2, 3, &cube).unwrap();
    assert_relative_eq!(report.exact_E_nonpareto, 0.5, max_relative = 1e-12);
    for n in [2u64, 10, 500] {
        let report = OracleReport::fixed(n, 1, 2, &cube).unwrap();
        assert_relative_eq!(
            report.exact_E_nonpareto,
            (n - 1) as f64,
            max_relative = 1e-10
        );
    }
    let report = OracleReport::fixed(1_000_000, 36, 2, &cube).unwrap();
    let c = report.offset.c_starstar.unwrap();
    assert_relative_eq!(report.limit_EKr[&2], limit_EKr(2, c).unwrap());
    assert!(report.exact_EKr[&2] > 0.0);
}

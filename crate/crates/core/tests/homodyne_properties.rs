mod common;

use common::*;
use proptest::prelude::*;
use statrs::function::erf::erf;
use vampire_core::homodyne::uniform_grid;
use vampire_core::{marginal_distribution, sample_quadratures, ModeSet};

fn trapezoid(grid: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..grid.len()).map(|i| 0.5 * (f(i) + f(i - 1)) * (grid[i] - grid[i - 1])).sum()
}

/// Kolmogorov-Smirnov distance of `samples` from `cdf`.
fn ks_statistic(mut samples: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value.
fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fock_marginals_ignore_phase(n in 0usize..=5, theta in 0.0..std::f64::consts::PI) {
        let grid = uniform_grid(6.0, 0.05);
        let rho = fock_mixed(5, n);
        let a = marginal_distribution(&rho, 0.0, &grid).unwrap();
        let b = marginal_distribution(&rho, theta, &grid).unwrap();
        let sup = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(sup < 1e-12);
    }

    #[test]
    fn marginals_are_normalized(rho in mixed_state(ModeSet::single(5).unwrap()), theta in 0.0..std::f64::consts::PI) {
        let grid = uniform_grid(6.0, 0.01);
        let p = marginal_distribution(&rho, theta, &grid).unwrap();
        prop_assert!((trapezoid(&grid, |i| p[i]) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn second_moment_is_n_plus_half() {
    let grid = uniform_grid(6.0, 0.01);
    for n in 0..=5 {
        let p = marginal_distribution(&fock_mixed(5, n), 0.3, &grid).unwrap();
        let x2 = trapezoid(&grid, |i| grid[i] * grid[i] * p[i]);
        assert!((x2 - (n as f64 + 0.5)).abs() < 1e-6, "n {n}: {x2}");
    }
}

#[test]
fn vacuum_samples_pass_ks() {
    let data = sample_quadratures(&fock_mixed(3, 0), &[0.0], 100_000, 7).unwrap();
    let values: Vec<f64> = data.samples.iter().map(|s| s.value).collect();
    let d = ks_statistic(values, |x| 0.5 * (1.0 + erf(x)));
    assert!(d < ks_critical(100_000), "D = {d}");
}

#[test]
fn single_photon_samples_pass_ks() {
    let data = sample_quadratures(&fock_mixed(3, 1), &[1.1], 100_000, 8).unwrap();
    let values: Vec<f64> = data.samples.iter().map(|s| s.value).collect();
    let cdf = |x: f64| 0.5 * (1.0 + erf(x)) - x * (-x * x).exp() / std::f64::consts::PI.sqrt();
    let d = ks_statistic(values, cdf);
    assert!(d < ks_critical(100_000), "D = {d}");
}

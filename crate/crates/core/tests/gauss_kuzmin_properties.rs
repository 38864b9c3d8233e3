mod common;

use common::*;
use mcf::gauss_kuzmin::{
    decay_curve, evolved_cdf, evolved_cdf_monte_carlo, limit_cdf, InitialDistribution, NOISE_FLOOR,
};
use mcf::measures::gamma_cdf;
use mcf::transfer::{GridFunction, DEFAULT_CHEBYSHEV_SIZE};

#[test]
fn limit_law_is_gamma() {
    for m in 2..=10u32 {
        for j in 0..1000 {
            let x = j as f64 / 999.0;
            let (a, b) = (limit_cdf(x, m).unwrap(), gamma_cdf(x, m).unwrap());
            assert!((a - b).abs() <= 1e-15, "m={m} x={x}");
        }
    }
}

#[test]
fn lebesgue_decay_is_monotone() {
    for m in [2u32, 3, 5] {
        let report = decay_curve(&InitialDistribution::Lebesgue, 8, m, 1025).unwrap();
        let e = &report.errors;
        for n in 1..e.len() {
            if e[n - 1] > NOISE_FLOOR {
                assert!(e[n] <= e[n - 1], "m={m} n={n}: {e:?}");
            }
        }
        let q = report.fitted_rate.unwrap();
        assert!(q > 0.0 && q < 1.0, "m={m}");
    }
}

#[test]
fn gamma_start_stays_put() {
    for m in [2u32, 3] {
        let h = GridFunction::chebyshev(DEFAULT_CHEBYSHEV_SIZE, |x| gamma_density_ref(x, m)).unwrap();
        let mu0 = InitialDistribution::grid_density(h).unwrap();
        for n in [1usize, 4] {
            for j in 0..=16 {
                let x = j as f64 / 16.0;
                let got = evolved_cdf(&mu0, n, m, x).unwrap();
                assert!((got - gamma_cdf_ref(x, m)).abs() < 1e-11, "m={m} n={n} x={x}");
            }
        }
    }
}

#[test]
fn monte_carlo_agrees_with_the_operator_route() {
    let xs: Vec<f64> = (0..=64).map(|j| j as f64 / 64.0).collect();
    for n in [1usize, 3, 5] {
        let mc = evolved_cdf_monte_carlo(&InitialDistribution::Lebesgue, n, 2, &xs, 1_000_000, 0xC0FFEE).unwrap();
        let worst = xs
            .iter()
            .zip(&mc.cdf)
            .map(|(&x, &c)| (c - evolved_cdf(&InitialDistribution::Lebesgue, n, 2, x).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 3.0 * mc.ks_bound, "n={n}: {worst} vs {}", mc.ks_bound);
    }
}

#[test]
fn first_iterate_error_matches_a_direct_maximization() {
    // λ(T^{-1}[0, x)) = Σ_i m^{-i} (1 - 1/(1 + kx)) = m x / (1 + kx)
    let e1 = decay_curve(&InitialDistribution::Lebesgue, 3, 2, 4097).unwrap().errors[0];
    let gap = |x: f64| (2.0 * x / (1.0 + x) - gamma_cdf_ref(x, 2)).abs();
    let (_, best) = golden_max(gap, 0.0, 1.0, 1e-12);
    assert!((e1 - best).abs() < 1e-10, "{e1} vs {best}");
}

#[test]
fn invalid_start_densities_are_rejected() {
    let negative = GridFunction::uniform(33, |x| 2.0 - 4.0 * x).unwrap();
    assert!(InitialDistribution::grid_density(negative).is_err());
    let heavy = GridFunction::uniform(33, |_| 2.0).unwrap();
    assert!(InitialDistribution::grid_density(heavy).is_err());
}

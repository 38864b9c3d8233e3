//! Empirical Gauss–Kuzmin behaviour: how fast `μ(T^n < x)` approaches the
//! limit law for a given start distribution.
//!
//! The rate and constant reported by [`decay_curve`] are regression
//! estimates from the computed errors, not derived quantities.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::shift_unchecked;
use crate::error::{check_base, Error, Result};
use crate::measures::MeasureParams;
use crate::transfer::{
    DensityEvolution, GridFunction, Interpolation, WeightParams, DEFAULT_CHEBYSHEV_SIZE,
    DEFAULT_TAIL_TOL,
};

/// Errors at or below this are treated as numerical noise.
pub const NOISE_FLOOR: f64 = 1e-12;

/// `(c_m/(m-1)^2) log(m((m-1)x+1) / ((m-1)x+m))`.
pub fn limit_cdf(x: f64, m: u32) -> Result<f64> {
    let params = MeasureParams::new(m)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    let k = (m - 1) as f64;
    let mf = m as f64;
    let ratio = mf * (k * x + 1.0) / (k * x + mf);
    Ok(params.c / (k * k) * ratio.ln())
}

/// A start distribution on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialDistribution {
    Lebesgue,
    /// An absolutely continuous law given by its density.
    GridDensity(GridFunction),
}

impl InitialDistribution {
    pub fn grid_density(h: GridFunction) -> Result<Self> {
        if h.min_value() < 0.0 {
            return Err(Error::Validation("density must be nonnegative".into()));
        }
        let mass = h.integral();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("density integrates to {mass}, not 1")));
        }
        Ok(Self::GridDensity(h))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Self::Lebesgue => "lebesgue",
            Self::GridDensity(_) => "grid-density",
        }
    }

    /// The density in the representation used by the operator route.
    pub fn density(&self) -> GridFunction {
        match self {
            Self::Lebesgue => {
                GridFunction::chebyshev(DEFAULT_CHEBYSHEV_SIZE, |_| 1.0).expect("valid grid")
            }
            Self::GridDensity(h) => h.clone(),
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, sup: f64) -> f64 {
        match self {
            Self::Lebesgue => 1.0 - rng.random::<f64>(),
            Self::GridDensity(h) => loop {
                let x = 1.0 - rng.random::<f64>();
                if rng.random::<f64>() * sup <= h.eval(x) {
                    break x;
                }
            },
        }
    }
}

fn evolution(mu0: &InitialDistribution, m: u32) -> Result<DensityEvolution> {
    DensityEvolution::new(mu0.density(), WeightParams::new(m, DEFAULT_TAIL_TOL)?)
}

/// `μ(T^{-n}([0, x)))` by density evolution under the transfer operator.
pub fn evolved_cdf(mu0: &InitialDistribution, n: usize, m: u32, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    let mut evo = evolution(mu0, m)?;
    evo.advance_to(n)?;
    Ok(evo.cdf(x))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCdf {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub xs: Vec<f64>,
    pub cdf: Vec<f64>,
    /// 99% Kolmogorov–Smirnov half-width `1.628 / sqrt(samples)`.
    pub ks_bound: f64,
    /// Samples redrawn because an iterate hit exactly zero.
    pub restarts: u64,
}

/// `μ(T^{-n}([0, x)))` by sampling from `mu0` and iterating the float shift.
///
/// Sample `j` draws from its own ChaCha stream `j` under `seed`, so the
/// result does not depend on the thread count.
pub fn evolved_cdf_monte_carlo(
    mu0: &InitialDistribution,
    n: usize,
    m: u32,
    xs: &[f64],
    samples: usize,
    seed: u64,
) -> Result<MonteCarloCdf> {
    check_base(m)?;
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let sup = match mu0 {
        InitialDistribution::Lebesgue => 1.0,
        InitialDistribution::GridDensity(h) => h.sup_abs(),
    };
    let draws: Vec<(f64, u64)> = (0..samples as u64)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j);
            let mut restarts = 0;
            'draw: loop {
                let mut x = mu0.sample(&mut rng, sup);
                for _ in 0..n {
                    if x == 0.0 {
                        restarts += 1;
                        continue 'draw;
                    }
                    x = shift_unchecked(x, m);
                }
                break (x, restarts);
            }
        })
        .collect();
    let restarts = draws.iter().map(|d| d.1).sum();
    let mut finals: Vec<f64> = draws.into_iter().map(|d| d.0).collect();
    finals.sort_by(f64::total_cmp);
    let cdf = xs
        .iter()
        .map(|&x| finals.partition_point(|&v| v < x) as f64 / samples as f64)
        .collect();
    Ok(MonteCarloCdf {
        n,
        samples,
        seed,
        xs: xs.to_vec(),
        cdf,
        ks_bound: 1.628 / (samples as f64).sqrt(),
        restarts,
    })
}

/// The fixed x-grid on which sup-distances are measured.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupGrid {
    pub base_size: usize,
    pub refined_upto: f64,
    pub refine_factor: usize,
    pub points: usize,
    /// How the evolved densities were represented.
    pub representation: String,
}

/// `base_size` uniform points on `[0, 1]`, with the spacing divided by
/// `refine_factor` on `[0, refined_upto]`.
pub fn sup_grid(base_size: usize, refined_upto: f64, refine_factor: usize) -> Vec<f64> {
    let h = 1.0 / (base_size - 1) as f64;
    let fine = h / refine_factor as f64;
    let fine_count = (refined_upto / fine).round() as usize;
    let mut xs: Vec<f64> = (0..=fine_count).map(|j| j as f64 * fine).collect();
    xs.extend((0..base_size).map(|j| j as f64 * h).filter(|&x| x > refined_upto));
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub m: u32,
    pub mu0: String,
    /// `e_1..e_N`, sup-distances to the limit law.
    pub errors: Vec<f64>,
    /// Empirical `q` from the least-squares fit of `log e_n` on `n`.
    pub fitted_rate: Option<f64>,
    /// Empirical `k` from the same fit.
    pub fitted_constant: Option<f64>,
    pub r_squared: Option<f64>,
    /// Inclusive range of `n` used in the fit.
    pub fit_range: Option<(usize, usize)>,
    pub grid: SupGrid,
    pub warnings: Vec<String>,
}

impl DecayReport {
    /// `n,e_n` lines with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,e_n\n");
        for (n, e) in self.errors.iter().enumerate() {
            out.push_str(&format!("{},{:e}\n", n + 1, e));
        }
        out
    }
}

/// Least squares `y = a + b x`; returns `(a, b, r^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (a, b, r2)
}

/// Sup-distances `e_1..e_n_max` and a geometric fit `e_n ≈ k q^n`.
pub fn decay_curve(mu0: &InitialDistribution, n_max: usize, m: u32, x_grid_size: usize) -> Result<DecayReport> {
    if n_max < 3 {
        return Err(Error::Domain("decay_curve needs N >= 3".into()));
    }
    if x_grid_size < 17 {
        return Err(Error::Validation("x grid needs at least 17 points".into()));
    }
    let params = MeasureParams::new(m)?;
    let xs = sup_grid(x_grid_size, 0.25, 4);
    let limit: Vec<f64> = xs.iter().map(|&x| params.cdf_unchecked(x)).collect();
    let mut evo = evolution(mu0, m)?;
    let mut errors = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        evo.advance()?;
        let cdf = evo.cdf_on(&xs);
        let e = cdf.iter().zip(&limit).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        errors.push(e);
    }
    let density = mu0.density();
    let representation = match density.interpolation() {
        Interpolation::Chebyshev => format!("chebyshev-{}", density.len()),
        Interpolation::Linear => format!("linear-{}", density.len()),
        Interpolation::StepLeft => "step-left-then-linear".to_string(),
    };
    let grid = SupGrid {
        base_size: x_grid_size,
        refined_upto: 0.25,
        refine_factor: 4,
        points: xs.len(),
        representation,
    };

    let mut warnings = Vec::new();
    let usable = errors.iter().take_while(|&&e| e > NOISE_FLOOR).count();
    if usable < errors.len() {
        warnings.push(format!(
            "e_{} is at or below the noise floor {NOISE_FLOOR:e}; fit truncated to n <= {usable}",
            usable + 1
        ));
    }
    let (fitted_rate, fitted_constant, r_squared, fit_range) = if usable >= 2 {
        let ns: Vec<f64> = (1..=usable).map(|n| n as f64).collect();
        let logs: Vec<f64> = errors[..usable].iter().map(|e| e.ln()).collect();
        let (a, b, r2) = linear_fit(&ns, &logs);
        (Some(b.exp()), Some(a.exp()), Some(r2), Some((1, usable)))
    } else {
        warnings.push("fewer than two errors above the noise floor; no fit".into());
        (None, None, None, None)
    };
    Ok(DecayReport {
        m,
        mu0: mu0.kind().to_string(),
        errors,
        fitted_rate,
        fitted_constant,
        r_squared,
        fit_range,
        grid,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{gamma_cdf, gamma_density};

    #[test]
    fn limit_law_examples() {
        for m in 2..=10 {
            assert_eq!(limit_cdf(0.0, m).unwrap(), 0.0);
            assert!((limit_cdf(1.0, m).unwrap() - 1.0).abs() < 1e-15);
        }
        assert!((limit_cdf(0.5, 2).unwrap() - 0.6337605789617424).abs() < 1e-15);
        assert!(limit_cdf(1.1, 2).is_err());
    }

    #[test]
    fn lebesgue_examples() {
        let leb = InitialDistribution::Lebesgue;
        assert!((evolved_cdf(&leb, 0, 2, 0.37).unwrap() - 0.37).abs() < 1e-15);
        let v = evolved_cdf(&leb, 1, 2, 0.5).unwrap();
        // the neglected branches cost about tail_tol * sup f
        assert!((v - 2.0 / 3.0).abs() < 1e-11, "{v:e}");
    }

    #[test]
    fn stationary_start_has_no_decay() {
        let g = GridFunction::chebyshev(DEFAULT_CHEBYSHEV_SIZE, |x| gamma_density(x, 3).unwrap()).unwrap();
        let mu0 = InitialDistribution::grid_density(g).unwrap();
        let r = decay_curve(&mu0, 4, 3, 257).unwrap();
        assert!(r.errors.iter().all(|&e| e <= 1e-8));
        assert!(r.fitted_rate.is_none());
        assert!(!r.warnings.is_empty());
        assert!((evolved_cdf(&mu0, 2, 3, 0.3).unwrap() - gamma_cdf(0.3, 3).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn bad_density_is_rejected() {
        let h = GridFunction::uniform(17, |_| 0.5).unwrap();
        assert!(matches!(InitialDistribution::grid_density(h), Err(Error::Validation(_))));
    }

    #[test]
    fn sup_grid_layout() {
        let xs = sup_grid(17, 0.25, 4);
        assert_eq!(xs[0], 0.0);
        assert_eq!(*xs.last().unwrap(), 1.0);
        assert_eq!(xs.len(), 17 + 3 * 4);
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let leb = InitialDistribution::Lebesgue;
        let a = evolved_cdf_monte_carlo(&leb, 2, 2, &[0.5], 2000, 7).unwrap();
        let b = evolved_cdf_monte_carlo(&leb, 2, 2, &[0.5], 2000, 7).unwrap();
        assert_eq!(a, b);
        let exact = evolved_cdf(&leb, 2, 2, 0.5).unwrap();
        assert!((a.cdf[0] - exact).abs() < a.ks_bound);
    }

    #[test]
    fn fit_of_exact_geometric() {
        let ns = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = ns.iter().map(|n| (0.3f64).ln() * n + 2f64.ln()).collect();
        let (a, b, r2) = linear_fit(&ns, &ys);
        assert!((b.exp() - 0.3).abs() < 1e-14 && (a.exp() - 2.0).abs() < 1e-13 && (r2 - 1.0).abs() < 1e-14);
    }
}

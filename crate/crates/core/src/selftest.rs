//! A compact run of the library's invariants, used by `mcf selftest`.

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cf::{expand, FundamentalInterval, ConvergentState, determinant_closed_form, s_sequence, DEFAULT_MAX_DIGITS};
use crate::chain::{bbl_conditional_exact, digit_conditional, simulate_trajectory, stationarity_residual};
use crate::error::Result;
use crate::gauss_kuzmin::{decay_curve, limit_cdf, InitialDistribution};
use crate::measures::{check_extension_preserved, ExtensionRect, MeasureParams};
use crate::rational::ExactRational;
use crate::transfer::{
    pf_apply, tail_mass, variation, variation_bound_constant, weight, GridFunction, WeightParams,
    DEFAULT_TAIL_TOL,
};
use crate::util::inv_pow_f64;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name: name.to_string(), passed, detail }
}

fn round_trip() -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for m in [2u32, 3, 5] {
        let (mut total, mut terminated, mut exact) = (0, 0, 0);
        for q in 2..=60i64 {
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                total += 1;
                let x = ExactRational::frac(p, q);
                let e = expand(&x, m, DEFAULT_MAX_DIGITS)?;
                if e.terminated {
                    terminated += 1;
                    exact += usize::from(e.value()? == x);
                }
            }
        }
        let detail = format!("{terminated}/{total} terminate, {exact} round-trip exactly");
        if m == 2 {
            out.push(check("rational round trip (m=2)", exact == total, detail));
        } else {
            // rationals need not have finite expansions once m > 2
            out.push(check(&format!("rational termination census (m={m})"), exact == terminated, detail));
        }
    }
    Ok(out)
}

fn determinants(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut bad = 0;
    for _ in 0..200 {
        let m = [2u32, 3, 10][rng.random_range(0..3)];
        let len = rng.random_range(1..=25);
        let digits: Vec<u32> = (0..len).map(|_| rng.random_range(0..=10)).collect();
        let mut s = ConvergentState::new(m)?;
        for &a in &digits {
            s.push(a);
        }
        bad += usize::from(s.determinant()? != determinant_closed_form(&digits, m)?);
    }
    Ok(check("determinant identity", bad == 0, format!("{bad} mismatches in 200 sequences")))
}

fn prefixes(max_len: usize, max_digit: u32) -> Vec<Vec<u32>> {
    let mut all = Vec::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p: &Vec<u32>| {
                (0..=max_digit).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
        all.extend(layer.iter().cloned());
    }
    all
}

fn intervals_and_conditionals() -> Result<Vec<CheckResult>> {
    let (mut bad_len, mut bad_cond, mut bad_bbl, mut n) = (0, 0, 0, 0);
    for m in [2u32, 3] {
        for prefix in prefixes(3, 3) {
            n += 1;
            let iv = FundamentalInterval::new(&prefix, m)?;
            bad_len += usize::from(iv.endpoint_length() != iv.measure);
            let s = s_sequence(&prefix, m)?.pop().expect("non-empty");
            for i in 0..=3 {
                let mut child = prefix.clone();
                child.push(i);
                let ratio = &FundamentalInterval::new(&child, m)?.measure / &iv.measure;
                bad_cond += usize::from(digit_conditional(&prefix, i, m)? != ratio);
            }
            let x = ExactRational::frac(2, 7);
            let bbl = bbl_conditional_exact(&x, &s, m)?;
            // {T^n < x} within the interval is the arc of endpoints t in (0, x)
            let at = |t: &ExactRational| crate::cf::evaluate_with_tail(&prefix, t, m);
            let zero = at(&ExactRational::zero())?;
            let num = (&at(&x)? - &zero).abs();
            let den = (&at(&ExactRational::one())? - &zero).abs();
            bad_bbl += usize::from(bbl != &num / &den);
        }
    }
    Ok(vec![
        check("interval length closed form", bad_len == 0, format!("{bad_len} mismatches in {n} prefixes")),
        check("digit conditional law", bad_cond == 0, format!("{bad_cond} mismatches")),
        check("Brodén–Borel–Lévy formula", bad_bbl == 0, format!("{bad_bbl} mismatches")),
    ])
}

fn weights() -> Result<Vec<CheckResult>> {
    let mut worst: f64 = 0.0;
    for m in [2u32, 3, 5, 10] {
        let p = WeightParams::new(m, DEFAULT_TAIL_TOL)?;
        for j in 0..100 {
            let y = (m - 1) as f64 * j as f64 / 99.0;
            let head: f64 = (0..=p.max_branch).rev().map(|i| weight(y, i, m).unwrap()).sum();
            worst = worst.max((head + tail_mass(y, p.max_branch, m)? - 1.0).abs());
        }
    }
    let mut inv: f64 = 0.0;
    for m in [2u32, 3, 5] {
        let g = MeasureParams::new(m)?;
        for j in 1..=200 {
            let u = j as f64 / 200.0;
            inv = inv.max((g.shift_preimage_measure(u, 1e-17)? - g.cdf(u)?).abs());
        }
    }
    let mut lim: f64 = 0.0;
    for m in 2..=10 {
        let g = MeasureParams::new(m)?;
        for j in 0..=100 {
            let x = j as f64 / 100.0;
            lim = lim.max((limit_cdf(x, m)? - g.cdf(x)?).abs());
        }
    }
    Ok(vec![
        check("weight normalization", worst <= 1e-14, format!("max deviation {worst:e}")),
        check("invariance of gamma_m", inv <= 1e-12, format!("max residual {inv:e}")),
        check("limit law equals gamma_m cdf", lim <= 1e-15, format!("max difference {lim:e}")),
    ])
}

fn extension(rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for m in [2u32, 3, 5] {
        let g = MeasureParams::new(m)?;
        for _ in 0..20 {
            let (a, b) = (rng.random::<f64>(), rng.random::<f64>());
            let (c, d) = (a.min(b), a.max(b));
            let i = rng.random_range(0..6);
            let rect = if rng.random::<bool>() {
                ExtensionRect::Cylinder { i, c, d }
            } else {
                ExtensionRect::SubCylinder { i, j: rng.random_range(0..6), c, d }
            };
            worst = worst.max(check_extension_preserved(&rect, &g)?.residual);
        }
    }
    Ok(check("natural extension preserves measure", worst <= 1e-12, format!("max residual {worst:e}")))
}

fn variation_bound(rng: &mut ChaCha8Rng) -> Result<Vec<CheckResult>> {
    let mut slack = f64::INFINITY;
    for m in [2u32, 3, 4, 5] {
        let params = WeightParams::new(m, DEFAULT_TAIL_TOL)?;
        let km = variation_bound_constant(m)?.to_f64();
        for _ in 0..5 {
            let jumps = rng.random_range(1..=20);
            let mut breaks: Vec<f64> = (0..jumps).map(|_| rng.random_range(0.001..0.999)).collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let levels: Vec<f64> = (0..=breaks.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let f = GridFunction::step(&breaks, &levels)?;
            let img = pf_apply(&f, &params)?.function;
            slack = slack.min(km * variation(&f) + 1e-9 - variation(&img));
        }
    }
    let mut sharp: f64 = 0.0;
    for m in [2u32, 3, 4, 5] {
        let f = GridFunction::step(&[1.0 / m as f64], &[0.0, 1.0])?;
        let img = pf_apply(&f, &WeightParams::new(m, DEFAULT_TAIL_TOL)?)?.function;
        sharp = sharp.max((variation(&img) - variation_bound_constant(m)?.to_f64()).abs());
    }
    Ok(vec![
        check("variation bound", slack >= 0.0, format!("min slack {slack:e}")),
        check("variation bound is sharp", sharp <= 1e-12, format!("witness deviation {sharp:e}")),
    ])
}

fn chain_checks() -> Result<Vec<CheckResult>> {
    let mut worst: f64 = 0.0;
    for m in [2u32, 3, 5] {
        for j in 1..=16 {
            worst = worst.max(stationarity_residual(j as f64 / 16.0, m, 1e-12)?.residual);
        }
    }
    let g = MeasureParams::new(2)?;
    let steps = 200_000;
    let tr = simulate_trajectory(crate::chain::DEFAULT_SEED, steps, 2, 0.0)?;
    let mut counts = [0usize; 7];
    for &d in &tr.digits {
        if (d as usize) < counts.len() {
            counts[d as usize] += 1;
        }
    }
    let mut z_max: f64 = 0.0;
    for (i, &c) in counts.iter().enumerate() {
        let p = g.interval_mass(inv_pow_f64(2, i as u32 + 1), inv_pow_f64(2, i as u32))?;
        let sigma = (p * (1.0 - p) / steps as f64).sqrt();
        z_max = z_max.max((c as f64 / steps as f64 - p).abs() / sigma);
    }
    Ok(vec![
        check("kernel stationarity", worst <= 1e-8, format!("max residual {worst:e}")),
        check("digit frequencies", z_max <= 4.0, format!("max |z| {z_max:.3} over digits 0..6")),
    ])
}

fn decay() -> Result<CheckResult> {
    let r = decay_curve(&InitialDistribution::Lebesgue, 10, 2, 1025)?;
    let monotone = r.errors.windows(2).all(|w| w[1] < w[0]);
    let rate = r.fitted_rate.unwrap_or(f64::NAN);
    let r2 = r.r_squared.unwrap_or(f64::NAN);
    Ok(check(
        "Gauss–Kuzmin decay",
        monotone && rate > 0.0 && rate < 1.0 && r2 >= 0.98,
        format!("e_1 {:e}, e_10 {:e}, q {rate:.4}, r2 {r2:.5}", r.errors[0], r.errors[9]),
    ))
}

/// Runs every check; each is independent of the others' outcome.
pub fn run() -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(crate::chain::DEFAULT_SEED);
    let mut out = round_trip()?;
    out.push(determinants(&mut rng)?);
    out.extend(intervals_and_conditionals()?);
    out.extend(weights()?);
    out.push(extension(&mut rng)?);
    out.extend(variation_bound(&mut rng)?);
    out.extend(chain_checks()?);
    out.push(decay()?);
    Ok(out)
}

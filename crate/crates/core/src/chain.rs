//! The digit/state Markov chain.
//!
//! The state is `t = s/(m-1)` in `[0, 1]`. From `t` the next digit is `i`
//! with probability `P_i((m-1)t)` and the state moves to `u_i(t)`. Started
//! from `t = 0` the chain reproduces the law of the digits of a uniform
//! random point, and `γ_m` is its stationary distribution.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::cf::{float_digit, s_sequence};
use crate::error::{check_base, Error, Result};
use crate::measures::MeasureParams;
use crate::quadrature::{integrate_pieces, QuadOptions};
use crate::rational::ExactRational;
use crate::transfer::{inverse_branch_unchecked, tail_from, weight_unchecked};
use crate::util::inv_pow_f64;

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

/// A chain position. The random stream is a function of `seed` alone, and
/// step `n` always consumes the `n`-th 64-bit word of it, so any step can be
/// replayed in isolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainState {
    pub t: f64,
    pub step: u64,
    pub seed: u64,
}

impl ChainState {
    pub fn new(t: f64, seed: u64) -> Result<Self> {
        check_state(t)?;
        Ok(Self { t, step: 0, seed })
    }
}

fn check_state(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("chain state must lie in [0, 1], got {t}")));
    }
    Ok(())
}

fn unit_from_bits(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Smallest `j` with `m^{-j} < z`, for `z > 0`.
fn first_power_below(z: f64, m: u32) -> u32 {
    if z > 1.0 {
        0
    } else {
        float_digit(z, m) + 1
    }
}

/// Inverse-CDF draw of the next digit from state `t`, with `r` in `(0, 1]`:
/// the smallest `i` with `Σ_{j > i} P_j((m-1)t) < r`.
fn digit_for(t: f64, r: f64, m: u32) -> u32 {
    let k = (m - 1) as f64;
    let y = k * t;
    // tail_from(y, j) < r  <=>  m^{-j} < r(y+1) / (y+m-rk)
    let z = r * (y + 1.0) / (y + m as f64 - r * k);
    let mut j = first_power_below(z, m).max(1);
    while j > 1 && tail_from(y, j - 1, m) < r {
        j -= 1;
    }
    while tail_from(y, j, m) >= r {
        j += 1;
    }
    j - 1
}

fn draw(t: f64, bits: u64, m: u32) -> (u32, f64) {
    let r = 1.0 - unit_from_bits(bits);
    let i = digit_for(t, r, m);
    (i, inverse_branch_unchecked(t, i, m))
}

/// One transition: the drawn digit and the next state.
pub fn kernel_sample(state: ChainState, m: u32) -> Result<(u32, ChainState)> {
    check_base(m)?;
    check_state(state.t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(state.seed);
    rng.set_word_pos(2 * u128::from(state.step));
    let (i, t) = draw(state.t, rng.next_u64(), m);
    Ok((i, ChainState { t, step: state.step + 1, seed: state.seed }))
}

/// `Q_m(x, [0, u)) = Σ_{i : u_i(x) < u} P_i((m-1)x)`, summed in closed form
/// from the first branch below `u`.
pub fn kernel_cdf(x: f64, u: f64, m: u32) -> Result<f64> {
    check_base(m)?;
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain(format!("kernel_cdf needs x, u in [0, 1], got ({x}, {u})")));
    }
    Ok(kernel_cdf_unchecked(x, u, m))
}

fn kernel_cdf_unchecked(x: f64, u: f64, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let z = u * (1.0 + k * x);
    if z <= 0.0 {
        return 0.0;
    }
    tail_from(k * x, kernel_threshold(z, m), m)
}

/// The first branch index `E` with `u_i(x) < u`, given `z = u(1 + (m-1)x)`.
fn kernel_threshold(z: f64, m: u32) -> u32 {
    first_power_below(z, m)
}

/// `E(x, m) = ⌊log(u(1+(m-1)x)) / log m^{-1}⌋ + 1`, clamped at zero.
pub fn kernel_threshold_index(x: f64, u: f64, m: u32) -> Result<u32> {
    check_base(m)?;
    if !(0.0..=1.0).contains(&x) || !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain(format!("threshold needs x in [0, 1], u in (0, 1], got ({x}, {u})")));
    }
    Ok(kernel_threshold(u * (1.0 + (m - 1) as f64 * x), m))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub u: f64,
    /// `∫ Q_m(x, [0, u)) γ_m(dx)`
    pub lhs: f64,
    /// `γ_m([0, u))`
    pub rhs: f64,
    pub residual: f64,
}

/// Compares `∫ Q_m(x, [0, u)) γ_m(dx)` with `γ_m([0, u))`, integrating
/// piecewise between the points where the branch threshold jumps.
pub fn stationarity_residual(u: f64, m: u32, quad_tol: f64) -> Result<KernelReport> {
    let params = MeasureParams::new(m)?;
    if !(u > 0.0 && u <= 1.0) {
        return Err(Error::Domain(format!("u must lie in (0, 1], got {u}")));
    }
    let k = (m - 1) as f64;
    let breaks: Vec<f64> = (0..)
        .map(|j| (inv_pow_f64(m, j) / u - 1.0) / k)
        .take_while(|&x| x > 0.0)
        .filter(|&x| x < 1.0)
        .collect();
    let integrand = |x: f64| kernel_cdf_unchecked(x, u, m) * params.density_unchecked(x);
    let lhs = integrate_pieces(integrand, 0.0, 1.0, &breaks, QuadOptions::with_tol(quad_tol))?.value;
    let rhs = params.cdf_unchecked(u);
    Ok(KernelReport { u, lhs, rhs, residual: (lhs - rhs).abs() })
}

/// Stationarity reports on `u = j/n`, `j = 1..=n`.
pub fn stationarity_grid(n: usize, m: u32, quad_tol: f64) -> Result<Vec<KernelReport>> {
    (1..=n)
        .into_par_iter()
        .map(|j| stationarity_residual(j as f64 / n as f64, m, quad_tol))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub digits: Vec<u32>,
    /// `n_steps + 1` states, starting with `t0`.
    pub states: Vec<f64>,
}

/// Runs the chain for `n_steps` transitions from `t0`.
pub fn simulate_trajectory(seed: u64, n_steps: usize, m: u32, t0: f64) -> Result<Trajectory> {
    check_base(m)?;
    check_state(t0)?;
    if n_steps == 0 {
        return Err(Error::Domain("n_steps must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut digits = Vec::with_capacity(n_steps);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut t = t0;
    states.push(t);
    for _ in 0..n_steps {
        let (i, next) = draw(t, rng.next_u64(), m);
        digits.push(i);
        states.push(next);
        t = next;
    }
    Ok(Trajectory { seed, digits, states })
}

/// Final states of independent trajectories, one per seed, in seed order.
pub fn simulate_final_states(seeds: &[u64], n_steps: usize, m: u32, t0: f64) -> Result<Vec<f64>> {
    check_base(m)?;
    check_state(t0)?;
    Ok(seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n_steps).fold(t0, |t, _| draw(t, rng.next_u64(), m).1)
        })
        .collect())
}

/// `(s+m)x / (s+(m-1)x+1)`: the conditional probability that the `n`-th
/// shift falls below `x` given the first `n` digits, where `s = s_n`.
pub fn bbl_conditional(x: f64, s: f64, m: u32) -> Result<f64> {
    check_base(m)?;
    if !(0.0..=1.0).contains(&x) || !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("bbl_conditional needs x in [0, 1], s >= 0, got ({x}, {s})")));
    }
    Ok((s + m as f64) * x / (s + (m - 1) as f64 * x + 1.0))
}

/// Exact rational form of [`bbl_conditional`].
pub fn bbl_conditional_exact(x: &ExactRational, s: &ExactRational, m: u32) -> Result<ExactRational> {
    check_base(m)?;
    if x.is_negative() || *x > 1 || s.is_negative() {
        return Err(Error::Domain("bbl_conditional needs x in [0, 1], s >= 0".into()));
    }
    let k = ExactRational::from_integer(m - 1);
    let mm = ExactRational::from_integer(m);
    let num = (s + &mm) * x;
    let den = s + &(&k * x) + ExactRational::one();
    Ok(num / den)
}

/// `P_i(s)` in exact arithmetic.
pub fn weight_exact(s: &ExactRational, i: u32, m: u32) -> Result<ExactRational> {
    check_base(m)?;
    if s.is_negative() {
        return Err(Error::Domain("weight argument must be >= 0".into()));
    }
    let k = BigRational::from_integer(BigInt::from(m - 1));
    let mm = BigRational::from_integer(BigInt::from(m));
    let one = BigRational::one();
    let s = s.as_ratio();
    let hi = ExactRational::inverse_power(m, i).into_ratio();
    let lo = ExactRational::inverse_power(m, i + 1).into_ratio();
    let num = &k * &lo * (s + &one) * (s + &mm);
    let den = (s + &k * hi + &one) * (s + &k * lo + &one);
    Ok((num / den).into())
}

/// `λ(a_{n+1} = i | a_1..a_n) = P_i(s_n)`, exactly.
pub fn digit_conditional(prefix: &[u32], i: u32, m: u32) -> Result<ExactRational> {
    let s = s_sequence(prefix, m)?;
    weight_exact(s.last().expect("non-empty prefix"), i, m)
}

/// Float weight with the chain's argument convention, `P_i((m-1)t)`.
pub fn transition_probability(t: f64, i: u32, m: u32) -> Result<f64> {
    check_base(m)?;
    check_state(t)?;
    Ok(weight_unchecked((m - 1) as f64 * t, i, m))
}

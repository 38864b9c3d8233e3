use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{finite_digits, ConvergentState, Digit};
use crate::error::{check_base, Error, Result};
use crate::rational::ExactRational;
use crate::util::{big_pow, inv_pow_f64, le_inverse_power};

/// Digit guard used when expanding rationals.
pub const DEFAULT_MAX_DIGITS: usize = 64;

/// A finite run of digits of `x` in base `m`.
///
/// When `terminated` is set the shift reached exactly zero after the listed
/// digits, i.e. the full expansion is `digits` followed by the terminal
/// symbol (see [`Expansion::to_digits`]). When the digit guard was hit first,
/// `overflow` is set instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expansion {
    pub m: u32,
    pub digits: Vec<u32>,
    pub terminated: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub overflow: bool,
}

impl Expansion {
    /// Digits with the terminal symbol appended when terminated.
    pub fn to_digits(&self) -> Vec<Digit> {
        let mut out: Vec<Digit> = self.digits.iter().copied().map(Digit::Finite).collect();
        if self.terminated {
            out.push(Digit::Terminal);
        }
        out
    }

    /// The value of the listed digits; equals the source exactly when terminated.
    pub fn value(&self) -> Result<ExactRational> {
        evaluate(&self.to_digits(), self.m)
    }
}

fn check_unit_exact(x: &ExactRational) -> Result<()> {
    if x.is_negative() || *x >= 1 {
        return Err(Error::Domain(format!("x = {x} outside [0, 1)")));
    }
    Ok(())
}

fn check_unit_f64(x: f64) -> Result<()> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, 1)")));
    }
    Ok(())
}

fn approx_log2(n: &BigInt) -> f64 {
    let bits = n.bits();
    let shift = bits.saturating_sub(53);
    let top: BigInt = n.abs() >> shift;
    let lead = u64::try_from(&top).unwrap_or(u64::MAX) as f64;
    lead.log2() + shift as f64
}

/// Largest `i` with `p m^i <= q`, for `0 < p < q`.
fn exact_digit(p: &BigInt, q: &BigInt, m: u32) -> u32 {
    let est = (approx_log2(q) - approx_log2(p)) / f64::from(m).log2();
    let mut i = est.floor().max(0.0) as u32;
    let fits = |i: u32| p * big_pow(m, i) <= *q;
    while i > 0 && !fits(i) {
        i -= 1;
    }
    while fits(i + 1) {
        i += 1;
    }
    i
}

/// First digit `a_1(x)`: the unique `i` with `m^{-(i+1)} < x <= m^{-i}`, or
/// the terminal symbol for `x = 0`.
pub fn digit_first(x: &ExactRational, m: u32) -> Result<Digit> {
    check_base(m)?;
    check_unit_exact(x)?;
    if x.is_zero() {
        return Ok(Digit::Terminal);
    }
    Ok(Digit::Finite(exact_digit(x.numerator(), x.denominator(), m)))
}

/// Float variant of [`digit_first`]. The logarithmic estimate is corrected
/// with exact comparisons against `m^{-i}`, so the result agrees with the
/// exact path applied to the float's dyadic value.
pub fn digit_first_f64(x: f64, m: u32) -> Result<Digit> {
    check_base(m)?;
    check_unit_f64(x)?;
    if x == 0.0 {
        return Ok(Digit::Terminal);
    }
    Ok(Digit::Finite(float_digit(x, m)))
}

pub(crate) fn float_digit(x: f64, m: u32) -> u32 {
    let est = (-x.ln() / f64::from(m).ln()).floor();
    let mut i = if est.is_finite() { est.clamp(0.0, 1e9) as u32 } else { 0 };
    while i > 0 && !le_inverse_power(x, m, i) {
        i -= 1;
    }
    while le_inverse_power(x, m, i + 1) {
        i += 1;
    }
    i
}

/// The shift `T_m(x) = (m^{-a_1(x)}/x - 1)/(m-1)`, with `T_m(0) = 0`.
pub fn shift(x: &ExactRational, m: u32) -> Result<ExactRational> {
    check_base(m)?;
    check_unit_exact(x)?;
    if x.is_zero() {
        return Ok(ExactRational::zero());
    }
    let (p, q) = (x.numerator(), x.denominator());
    let a = exact_digit(p, q, m);
    let pm = p * big_pow(m, a);
    let num = q - &pm;
    let den = pm * BigInt::from(m - 1);
    Ok(BigRational::new(num, den).into())
}

/// Float variant of [`shift`]; the result is clamped into `[0, 1)`.
pub fn shift_f64(x: f64, m: u32) -> Result<f64> {
    check_base(m)?;
    check_unit_f64(x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(shift_unchecked(x, m))
}

pub(crate) fn shift_unchecked(x: f64, m: u32) -> f64 {
    let a = float_digit(x, m);
    let t = (inv_pow_f64(m, a) / x - 1.0) / f64::from(m - 1);
    t.clamp(0.0, 1.0 - f64::EPSILON / 2.0)
}

/// Expands `x` by iterating the shift until it reaches zero or
/// `max_digits` digits have been produced.
pub fn expand(x: &ExactRational, m: u32, max_digits: usize) -> Result<Expansion> {
    check_base(m)?;
    check_unit_exact(x)?;
    if max_digits == 0 {
        return Err(Error::Domain("max_digits must be >= 1".into()));
    }
    let mut digits = Vec::new();
    let mut current = x.clone();
    while !current.is_zero() {
        if digits.len() == max_digits {
            return Ok(Expansion { m, digits, terminated: false, overflow: true });
        }
        let Digit::Finite(a) = digit_first(&current, m)? else { unreachable!("nonzero point") };
        digits.push(a);
        current = shift(&current, m)?;
    }
    Ok(Expansion { m, digits, terminated: true, overflow: false })
}

/// Evaluates a finite expansion `[[a_1, ..., a_n]]` right to left. A
/// trailing terminal symbol contributes `m^{-inf} = 0`, so `[[inf]] = 0`.
pub fn evaluate(digits: &[Digit], m: u32) -> Result<ExactRational> {
    check_base(m)?;
    let Some((last, body)) = digits.split_last() else {
        return Err(Error::MalformedExpansion("empty digit sequence".into()));
    };
    let body = finite_digits(body)
        .map_err(|_| Error::MalformedExpansion("terminal symbol before the last position".into()))?;
    let k = BigRational::from_integer(BigInt::from(m - 1));
    // the value of the innermost tail, starting from the last digit
    let mut value = match last {
        Digit::Terminal => BigRational::zero(),
        Digit::Finite(a) => ExactRational::inverse_power(m, *a).into_ratio(),
    };
    let one = BigRational::one();
    for &a in body.iter().rev() {
        let head = ExactRational::inverse_power(m, a).into_ratio();
        value = head / (&one + &k * value);
    }
    Ok(value.into())
}

/// `(p_n + (m-1) t m^{a_n} p_{n-1}) / (q_n + (m-1) t m^{a_n} q_{n-1})`, the
/// value of the digits followed by a tail point `t`. With `t = T^n(x)` this
/// reconstructs `x`.
pub fn evaluate_with_tail(digits: &[u32], t: &ExactRational, m: u32) -> Result<ExactRational> {
    check_base(m)?;
    if digits.is_empty() {
        return Err(Error::MalformedExpansion("empty digit sequence".into()));
    }
    if t.is_negative() {
        return Err(Error::Domain(format!("tail t = {t} must be >= 0")));
    }
    let mut state = ConvergentState::new(m)?;
    for &a in digits {
        state.push(a);
    }
    let weight = BigRational::from_integer(BigInt::from(m - 1) * big_pow(m, state.last_digit))
        * t.as_ratio();
    let p = BigRational::from_integer(state.p_cur.clone())
        + &weight * BigRational::from_integer(state.p_prev.clone());
    let q = BigRational::from_integer(state.q_cur.clone())
        + weight * BigRational::from_integer(state.q_prev.clone());
    Ok((p / q).into())
}

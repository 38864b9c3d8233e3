//! Small numeric helpers shared across modules.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::One;

pub(crate) fn big_pow(m: u32, e: u32) -> BigInt {
    BigInt::from(BigUint::from(m).pow(e))
}

/// `m^i` as a float, only when it is exactly representable.
pub(crate) fn exact_pow_f64(m: u32, i: u32) -> Option<f64> {
    if m.is_power_of_two() {
        let e = u64::from(m.trailing_zeros()) * u64::from(i);
        return (e <= 1023).then(|| 2f64.powi(e as i32));
    }
    u64::from(m)
        .checked_pow(i)
        .filter(|&p| p <= 1 << 53)
        .map(|p| p as f64)
}

/// `m^{-i}` as a float, correctly rounded whenever `m^i` is exact.
pub fn inv_pow_f64(m: u32, i: u32) -> f64 {
    match exact_pow_f64(m, i) {
        Some(p) => 1.0 / p,
        None => f64::from(m).powi(-(i.min(i32::MAX as u32) as i32)),
    }
}

/// Exact test of `x <= m^{-i}` for a finite nonnegative float.
pub(crate) fn le_inverse_power(x: f64, m: u32, i: u32) -> bool {
    if let Some(p) = exact_pow_f64(m, i) {
        // x * p rounded, plus the exact rounding residual
        let r = x * p;
        let e = x.mul_add(p, -r);
        return r < 1.0 || (r == 1.0 && e <= 0.0);
    }
    let exact = BigRational::from_float(x).expect("finite input");
    exact * BigRational::from_integer(big_pow(m, i)) <= BigRational::one()
}

use serde::Serialize;

use crate::error::{check_base, Error, Result};
use crate::util::inv_pow_f64;

/// Default bound on the neglected branch mass.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;

fn check_arg(y: f64) -> Result<()> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("weight argument must be finite and >= 0, got {y}")));
    }
    Ok(())
}

/// `P_i(y) = (m-1) m^{-(i+1)} (y+1)(y+m) / ((y + (m-1)m^{-i} + 1)(y + (m-1)m^{-(i+1)} + 1))`.
///
/// The operator and the digit chain evaluate this at `y = (m-1)x` for a
/// state `x` in `[0, 1]`.
pub fn weight(y: f64, i: u32, m: u32) -> Result<f64> {
    check_base(m)?;
    check_arg(y)?;
    Ok(weight_unchecked(y, i, m))
}

pub(crate) fn weight_unchecked(y: f64, i: u32, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let mf = m as f64;
    let hi = inv_pow_f64(m, i);
    let lo = inv_pow_f64(m, i + 1);
    k * lo * (y + 1.0) * (y + mf) / ((y + k * hi + 1.0) * (y + k * lo + 1.0))
}

/// `Σ_{i >= first} P_i(y) = (y+m) ε / (y + 1 + (m-1)ε)` with `ε = m^{-first}`.
pub(crate) fn tail_from(y: f64, first: u32, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let eps = inv_pow_f64(m, first);
    (y + m as f64) * eps / (y + 1.0 + k * eps)
}

/// `Σ_{i > N} P_i(y)` in closed form.
pub fn tail_mass(y: f64, n: u32, m: u32) -> Result<f64> {
    check_base(m)?;
    check_arg(y)?;
    Ok(tail_from(y, n.saturating_add(1), m))
}

/// `u_i(x) = m^{-i} / (1 + (m-1)x)`, the inverse of the shift restricted to
/// digit `i`.
pub fn inverse_branch(x: f64, i: u32, m: u32) -> Result<f64> {
    check_base(m)?;
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("inverse_branch needs x in [0, 1], got {x}")));
    }
    Ok(inverse_branch_unchecked(x, i, m))
}

pub(crate) fn inverse_branch_unchecked(x: f64, i: u32, m: u32) -> f64 {
    inv_pow_f64(m, i) / (1.0 + (m - 1) as f64 * x)
}

/// Truncation data for the branch sum of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightParams {
    pub m: u32,
    pub tail_tol: f64,
    /// Smallest `N` with `tail_mass(y, N) <= tail_tol` on all of `[0, m-1]`.
    pub max_branch: u32,
}

impl WeightParams {
    pub fn new(m: u32, tail_tol: f64) -> Result<Self> {
        check_base(m)?;
        if !(tail_tol > 0.0) || !tail_tol.is_finite() {
            return Err(Error::Validation(format!("tail_tol must be positive, got {tail_tol}")));
        }
        // the tail decreases in y, so y = 0 is the worst case
        let mut n = 0u32;
        while tail_from(0.0, n + 1, m) > tail_tol {
            n += 1;
        }
        Ok(Self { m, tail_tol, max_branch: n })
    }

    /// The neglected mass at `y = 0`, an upper bound over `[0, m-1]`.
    pub fn tail_bound(&self) -> f64 {
        tail_from(0.0, self.max_branch + 1, self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        assert!((weight(0.0, 0, 2).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!((weight(1.0, 0, 2).unwrap() - 0.4).abs() < 1e-16);
        assert!(weight(-0.1, 0, 2).is_err());
        assert!(weight(f64::NAN, 0, 2).is_err());
        let total: f64 = (0..200).map(|i| weight(0.7, i, 3).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tail_examples() {
        assert!((tail_mass(0.0, 0, 2).unwrap() - 2.0 / 3.0).abs() < 1e-16);
        let brute: f64 = (11..=200).rev().map(|i| weight(1.0, i, 2).unwrap()).sum();
        assert!((tail_mass(1.0, 10, 2).unwrap() - brute).abs() < 1e-15);
        assert!(tail_mass(0.5, 2000, 3).unwrap() == 0.0);
        assert_eq!(tail_from(0.3, 0, 5), 1.0);
    }

    #[test]
    fn branch_examples() {
        assert_eq!(inverse_branch(0.0, 0, 7).unwrap(), 1.0);
        assert!((inverse_branch(0.5, 1, 2).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        assert!(inverse_branch(1.5, 0, 2).is_err());
    }

    #[test]
    fn max_branch_is_minimal() {
        for m in [2u32, 3, 5, 10] {
            for tol in [1e-6, 1e-12, 1e-15] {
                let p = WeightParams::new(m, tol).unwrap();
                assert!(p.tail_bound() <= tol);
                if p.max_branch > 0 {
                    assert!(tail_from(0.0, p.max_branch, m) > tol);
                }
                let k = (m - 1) as f64;
                assert!(tail_mass(k, p.max_branch, m).unwrap() <= p.tail_bound());
            }
        }
        assert!(WeightParams::new(2, 0.0).is_err());
    }
}

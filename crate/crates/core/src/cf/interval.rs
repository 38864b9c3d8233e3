use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;

use super::ConvergentState;
use crate::error::{Error, Result};
use crate::rational::ExactRational;
use crate::util::big_pow;

/// The set of points whose first `n` digits equal `prefix`: an open interval
/// with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FundamentalInterval {
    pub m: u32,
    pub prefix: Vec<u32>,
    pub lower: ExactRational,
    pub upper: ExactRational,
    /// Lebesgue measure, from the closed form in the convergent denominators.
    pub measure: ExactRational,
}

fn state_for(prefix: &[u32], m: u32) -> Result<ConvergentState> {
    if prefix.is_empty() {
        return Err(Error::Domain("prefix must be non-empty".into()));
    }
    let mut state = ConvergentState::new(m)?;
    for &a in prefix {
        state.push(a);
    }
    Ok(state)
}

/// `(m-1)^n m^{a_1+...+a_n} / (q_n (q_n + (m-1) m^{a_n} q_{n-1}))`.
pub fn closed_form_measure(prefix: &[u32], m: u32) -> Result<ExactRational> {
    let s = state_for(prefix, m)?;
    let cross = BigInt::from(m - 1) * big_pow(m, s.last_digit);
    let num = BigInt::from(m - 1).pow(s.index as u32) * big_pow(m, digit_sum_u32(&s.digit_sum)?);
    let den = &s.q_cur * (&s.q_cur + cross * &s.q_prev);
    Ok(BigRational::new(num, den).into())
}

fn digit_sum_u32(sum: &BigInt) -> Result<u32> {
    u32::try_from(sum).map_err(|_| Error::Domain("digit sum too large".into()))
}

impl FundamentalInterval {
    pub fn new(prefix: &[u32], m: u32) -> Result<Self> {
        let s = state_for(prefix, m)?;
        let cross = BigInt::from(m - 1) * big_pow(m, s.last_digit);
        let convergent = BigRational::new(s.p_cur.clone(), s.q_cur.clone());
        // the other endpoint equals [[a_1, ..., a_{n-1}, a_n + 1]]
        let far = BigRational::new(
            &s.p_cur + &cross * &s.p_prev,
            &s.q_cur + &cross * &s.q_prev,
        );
        let (lower, upper) = if s.index % 2 == 1 {
            (far, convergent)
        } else {
            (convergent, far)
        };
        Ok(Self {
            m,
            prefix: prefix.to_vec(),
            lower: lower.into(),
            upper: upper.into(),
            measure: closed_form_measure(prefix, m)?,
        })
    }

    /// `upper - lower`, to be compared against [`Self::measure`].
    pub fn endpoint_length(&self) -> ExactRational {
        &self.upper - &self.lower
    }

    /// Closure membership.
    pub fn contains_closed(&self, x: &ExactRational) -> bool {
        &self.lower <= x && x <= &self.upper
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> ExactRational {
        ExactRational::frac(p, q)
    }

    #[test]
    fn interval_examples() {
        let i = FundamentalInterval::new(&[1], 2).unwrap();
        assert_eq!((i.lower.clone(), i.upper.clone(), i.measure.clone()), (r(1, 4), r(1, 2), r(1, 4)));
        let i = FundamentalInterval::new(&[1, 1], 2).unwrap();
        assert_eq!((i.lower.clone(), i.upper.clone(), i.measure.clone()), (r(1, 3), r(2, 5), r(1, 15)));
        assert_eq!(i.endpoint_length(), i.measure);
        let i = FundamentalInterval::new(&[0], 3).unwrap();
        assert_eq!((i.lower.clone(), i.upper.clone(), i.measure.clone()), (r(1, 3), r(1, 1), r(2, 3)));
        assert!(FundamentalInterval::new(&[], 2).is_err());
    }

    #[test]
    fn first_rank_marginal() {
        for m in [2u32, 3, 5] {
            for i in 0..6u32 {
                let iv = FundamentalInterval::new(&[i], m).unwrap();
                let expected = ExactRational::from_integer(m - 1) * ExactRational::inverse_power(m, i + 1);
                assert_eq!(iv.measure, expected);
            }
        }
    }
}

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{evaluate, Digit};
use crate::error::{check_base, Error, Result};
use crate::rational::ExactRational;
use crate::util::big_pow;

/// Rolling state of the convergent recurrences
///
/// ```text
/// p_n = m^{a_n} p_{n-1} + (m-1) m^{a_{n-1}} p_{n-2}   (n >= 2)
/// q_n = m^{a_n} q_{n-1} + (m-1) m^{a_{n-1}} q_{n-2}   (n >= 1)
/// ```
///
/// seeded with `p_0 = 0, q_0 = 1, p_1 = 1, q_{-1} = 0, a_0 = 0`. Pairs are
/// kept unreduced so the recurrences hold verbatim. At `n = 0` the field
/// `p_prev` has no meaning and is stored as zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConvergentState {
    pub m: u32,
    pub p_prev: BigInt,
    pub p_cur: BigInt,
    pub q_prev: BigInt,
    pub q_cur: BigInt,
    /// `a_1 + ... + a_n`
    pub digit_sum: BigInt,
    /// `a_n` (`a_0 = 0` before the first push)
    pub last_digit: u32,
    pub index: usize,
}

impl ConvergentState {
    pub fn new(m: u32) -> Result<Self> {
        check_base(m)?;
        Ok(Self {
            m,
            p_prev: BigInt::zero(),
            p_cur: BigInt::zero(),
            q_prev: BigInt::zero(),
            q_cur: BigInt::one(),
            digit_sum: BigInt::zero(),
            last_digit: 0,
            index: 0,
        })
    }

    /// Advances from `n` to `n + 1` with digit `a = a_{n+1}`.
    pub fn push(&mut self, a: u32) {
        let lead = big_pow(self.m, a);
        let cross = BigInt::from(self.m - 1) * big_pow(self.m, self.last_digit);
        let p_next = if self.index == 0 {
            BigInt::one()
        } else {
            &lead * &self.p_cur + &cross * &self.p_prev
        };
        let q_next = &lead * &self.q_cur + &cross * &self.q_prev;
        self.p_prev = std::mem::replace(&mut self.p_cur, p_next);
        self.q_prev = std::mem::replace(&mut self.q_cur, q_next);
        self.digit_sum += a;
        self.last_digit = a;
        self.index += 1;
    }

    /// The unreduced pair `(p_n, q_n)`.
    pub fn convergent(&self) -> (BigInt, BigInt) {
        (self.p_cur.clone(), self.q_cur.clone())
    }

    pub fn value(&self) -> ExactRational {
        BigRational::new(self.p_cur.clone(), self.q_cur.clone()).into()
    }

    /// `p_n q_{n-1} - p_{n-1} q_n`, defined for `n >= 1`.
    pub fn determinant(&self) -> Result<BigInt> {
        if self.index == 0 {
            return Err(Error::Domain("determinant needs n >= 1".into()));
        }
        Ok(&self.p_cur * &self.q_prev - &self.p_prev * &self.q_cur)
    }
}

/// `(-1)^{n-1} (m-1)^{n-1} m^{a_1 + ... + a_{n-1}}`, the value the
/// determinant must take after the digits `a_1..a_n`.
pub fn determinant_closed_form(digits: &[u32], m: u32) -> Result<BigInt> {
    check_base(m)?;
    let Some((_, head)) = digits.split_last() else {
        return Err(Error::Domain("determinant needs n >= 1".into()));
    };
    let n1 = head.len() as u32;
    let exponent: u32 = head.iter().sum();
    let magnitude = BigInt::from(m - 1).pow(n1) * big_pow(m, exponent);
    Ok(if n1 % 2 == 0 { magnitude } else { -magnitude })
}

/// The full convergent sequence `(p_0, q_0), (p_1, q_1), ..., (p_n, q_n)`,
/// seed included.
pub fn convergents(digits: &[u32], m: u32) -> Result<Vec<(BigInt, BigInt)>> {
    let mut state = ConvergentState::new(m)?;
    let mut out = Vec::with_capacity(digits.len() + 1);
    out.push(state.convergent());
    for &a in digits {
        state.push(a);
        out.push(state.convergent());
    }
    Ok(out)
}

fn check_nonempty(digits: &[u32]) -> Result<()> {
    if digits.is_empty() {
        return Err(Error::Domain("digit sequence must be non-empty".into()));
    }
    Ok(())
}

/// `s_1 = 0`, `s_n = (m-1) m^{-a_n} / (1 + s_{n-1})`.
pub fn s_sequence(digits: &[u32], m: u32) -> Result<Vec<ExactRational>> {
    check_base(m)?;
    check_nonempty(digits)?;
    let k = BigRational::from_integer(BigInt::from(m - 1));
    let mut s = BigRational::zero();
    let mut out = vec![ExactRational::zero()];
    for &a in &digits[1..] {
        let head = ExactRational::inverse_power(m, a).into_ratio();
        s = &k * head / (BigRational::one() + s);
        out.push(s.clone().into());
    }
    Ok(out)
}

/// `s_n = m^{-a_n} q_n / q_{n-1} - 1`, from the convergent denominators.
pub fn s_sequence_quotient_form(digits: &[u32], m: u32) -> Result<Vec<ExactRational>> {
    check_nonempty(digits)?;
    let mut state = ConvergentState::new(m)?;
    let mut out = Vec::with_capacity(digits.len());
    for &a in digits {
        state.push(a);
        let ratio = BigRational::new(state.q_cur.clone(), state.q_prev.clone() * big_pow(m, a));
        out.push((ratio - BigRational::one()).into());
    }
    Ok(out)
}

/// `s_n = (m-1) [[a_n, a_{n-1}, ..., a_2, inf]]` for `n >= 2`, and `s_1 = 0`.
pub fn s_sequence_reversed_form(digits: &[u32], m: u32) -> Result<Vec<ExactRational>> {
    check_base(m)?;
    check_nonempty(digits)?;
    let k = ExactRational::from_integer(m - 1);
    let mut out = vec![ExactRational::zero()];
    for n in 2..=digits.len() {
        let reversed: Vec<Digit> = digits[1..n]
            .iter()
            .rev()
            .map(|&a| Digit::Finite(a))
            .chain(std::iter::once(Digit::Terminal))
            .collect();
        out.push(&k * &evaluate(&reversed, m)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(v: &[(i64, i64)]) -> Vec<(BigInt, BigInt)> {
        v.iter().map(|&(p, q)| (BigInt::from(p), BigInt::from(q))).collect()
    }

    #[test]
    fn convergent_examples() {
        assert_eq!(convergents(&[1, 1], 2).unwrap(), pairs(&[(0, 1), (1, 2), (2, 6)]));
        assert_eq!(convergents(&[2, 2], 2).unwrap(), pairs(&[(0, 1), (1, 4), (4, 20)]));
        assert_eq!(convergents(&[], 2).unwrap(), pairs(&[(0, 1)]));
    }

    #[test]
    fn determinant_examples() {
        let mut s = ConvergentState::new(2).unwrap();
        assert!(s.determinant().is_err());
        s.push(7);
        assert_eq!(s.determinant().unwrap(), BigInt::from(1));
        s.push(1);
        let mut t = ConvergentState::new(2).unwrap();
        t.push(1);
        t.push(1);
        assert_eq!(t.determinant().unwrap(), BigInt::from(-2));
        let mut u = ConvergentState::new(2).unwrap();
        u.push(2);
        u.push(2);
        assert_eq!(u.determinant().unwrap(), BigInt::from(-4));
        assert_eq!(determinant_closed_form(&[2, 2], 2).unwrap(), BigInt::from(-4));
        assert_eq!(determinant_closed_form(&[5], 3).unwrap(), BigInt::from(1));
    }

    #[test]
    fn s_examples() {
        let f = ExactRational::frac;
        assert_eq!(s_sequence(&[1], 2).unwrap(), vec![ExactRational::zero()]);
        let expected = vec![ExactRational::zero(), f(1, 4), f(2, 5)];
        assert_eq!(s_sequence(&[1, 2, 1], 2).unwrap(), expected);
        assert_eq!(s_sequence_quotient_form(&[1, 2, 1], 2).unwrap(), expected);
        assert_eq!(s_sequence_reversed_form(&[1, 2, 1], 2).unwrap(), expected);
        assert_eq!(s_sequence(&[9], 5).unwrap(), vec![ExactRational::zero()]);
        assert!(s_sequence(&[], 2).is_err());
    }

    #[test]
    fn q_values_from_recurrence() {
        let c = convergents(&[1, 2, 1], 2).unwrap();
        let qs: Vec<_> = c.iter().map(|(_, q)| q.clone()).collect();
        assert_eq!(qs, [1, 2, 10, 28].map(BigInt::from).to_vec());
    }
}

//! The invariant measure `γ_m`, the natural extension and its measure.
//!
//! `γ_m` has density `c_m / ((1 + (m-1)x)(m + (m-1)x))` with
//! `c_m = (m-1)^2 / log(m^2/(2m-1))`. Writing `k = m - 1` and
//! `L = log(m^2/(2m-1))`, every mass below reduces to a single `ln_1p` of an
//! exactly-formed small argument divided by `L`, which keeps CDF differences
//! accurate near zero.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::cf::{digit_first, digit_first_f64, shift};
use crate::cf::Digit;
use crate::error::{check_base, Error, Result};
use crate::rational::ExactRational;
use crate::util::inv_pow_f64;

/// Base-dependent constants of `γ_m`, evaluated once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeasureParams {
    pub m: u32,
    /// Normalization constant `c_m`.
    pub c: f64,
    /// `log(m^2/(2m-1))`, so that `c_m / (m-1)^2 = 1 / log_norm`.
    pub log_norm: f64,
}

/// `log(m^2/(2m-1)) = 2 atanh(z)` with `z = (m-1)^2/(m^2+2m-1)`, summed in
/// 192-bit fixed point until the terms vanish, then rounded once.
fn log_norm_high_precision(m: u32) -> f64 {
    const BITS: u64 = 192;
    let m = i64::from(m);
    let num = BigInt::from((m - 1) * (m - 1));
    let den = BigInt::from(m * m + 2 * m - 1);
    let (num2, den2) = (&num * &num, &den * &den);
    let mut power = (BigInt::one() << BITS) * &num / &den;
    let mut sum = BigInt::zero();
    let mut j: i64 = 0;
    while !power.is_zero() {
        sum += &power / BigInt::from(2 * j + 1);
        power = power * &num2 / &den2;
        j += 1;
    }
    BigRational::new(sum * 2, BigInt::one() << BITS).to_f64().unwrap_or(f64::NAN)
}

fn check_unit_closed(x: f64, name: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

impl MeasureParams {
    pub fn new(m: u32) -> Result<Self> {
        check_base(m)?;
        let log_norm = log_norm_high_precision(m);
        let k = f64::from(m - 1);
        Ok(Self { m, c: k * k / log_norm, log_norm })
    }

    fn k(&self) -> f64 {
        f64::from(self.m - 1)
    }

    fn mf(&self) -> f64 {
        f64::from(self.m)
    }

    /// `c_m / ((1 + (m-1)x)(m + (m-1)x))`.
    pub fn density(&self, x: f64) -> Result<f64> {
        check_unit_closed(x, "x")?;
        Ok(self.density_unchecked(x))
    }

    pub(crate) fn density_unchecked(&self, x: f64) -> f64 {
        let k = self.k();
        self.c / ((1.0 + k * x) * (self.mf() + k * x))
    }

    /// `γ_m([0, x])`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit_closed(x, "x")?;
        Ok(self.cdf_unchecked(x))
    }

    pub(crate) fn cdf_unchecked(&self, x: f64) -> f64 {
        // m(1+kx)/(m+kx) - 1 = k^2 x / (m + kx)
        let k = self.k();
        (k * k * x / (self.mf() + k * x)).ln_1p() / self.log_norm
    }

    /// `γ_m((a, b))` for `0 <= a <= b <= 1`, without subtracting CDFs.
    pub fn interval_mass(&self, a: f64, b: f64) -> Result<f64> {
        check_unit_closed(a, "a")?;
        check_unit_closed(b, "b")?;
        if b < a {
            return Err(Error::Domain(format!("empty interval ({a}, {b})")));
        }
        Ok(self.interval_mass_unchecked(a, b))
    }

    pub(crate) fn interval_mass_unchecked(&self, a: f64, b: f64) -> f64 {
        let (k, m) = (self.k(), self.mf());
        (k * k * (b - a) / ((m + k * b) * (1.0 + k * a))).ln_1p() / self.log_norm
    }

    /// `γ_m(T_m^{-1}([0, u)))` as a sum over the inverse branches
    /// `(m^{-i}/(1+(m-1)u), m^{-i}]`, truncated once the remaining branches,
    /// which all lie in `(0, m^{-(N+1)}]`, carry less than `tol`.
    pub fn shift_preimage_measure(&self, u: f64, tol: f64) -> Result<f64> {
        check_unit_closed(u, "u")?;
        if !(tol > 0.0) {
            return Err(Error::Domain(format!("tol = {tol} must be > 0")));
        }
        let k = self.k();
        let mut total = 0.0;
        let mut i = 0u32;
        loop {
            let top = inv_pow_f64(self.m, i);
            total += self.interval_mass_unchecked(top / (1.0 + k * u), top);
            let rest = self.cdf_unchecked(inv_pow_f64(self.m, i + 1));
            if rest < tol {
                break;
            }
            i += 1;
        }
        Ok(total)
    }

    /// `γ̄_m(r)`: the closed-form integral of `c_m/(1+(m-1)(x+y))^2` over `r`.
    pub fn extended_measure(&self, r: &Rect) -> f64 {
        if r.is_degenerate() {
            return 0.0;
        }
        let k = self.k();
        // ln((1+k(x1+y))/(1+k(x0+y))) = ln_1p(k(x1-x0)/(1+k(x0+y)))
        let strip = |y: f64| (k * (r.x_hi - r.x_lo) / (1.0 + k * (r.x_lo + y))).ln_1p();
        (strip(r.y_lo) - strip(r.y_hi)) / self.log_norm
    }
}

/// `γ_m` density.
pub fn gamma_density(x: f64, m: u32) -> Result<f64> {
    MeasureParams::new(m)?.density(x)
}

/// `γ_m([0, x])`.
pub fn gamma_cdf(x: f64, m: u32) -> Result<f64> {
    MeasureParams::new(m)?.cdf(x)
}

/// An axis-aligned rectangle in the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn new(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Result<Self> {
        for (v, name) in [(x_lo, "x_lo"), (x_hi, "x_hi"), (y_lo, "y_lo"), (y_hi, "y_hi")] {
            check_unit_closed(v, name)?;
        }
        if x_lo > x_hi || y_lo > y_hi {
            return Err(Error::Domain("rectangle bounds out of order".into()));
        }
        Ok(Self { x_lo, x_hi, y_lo, y_hi })
    }

    pub fn unit() -> Self {
        Self { x_lo: 0.0, x_hi: 1.0, y_lo: 0.0, y_hi: 1.0 }
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x_lo < self.x_hi && self.y_lo < self.y_hi)
    }
}

/// The natural extension `(x, y) ↦ (T_m(x), m^{-a_1(x)}/(1+(m-1)y))`.
pub fn natural_extension(x: f64, y: f64, m: u32) -> Result<(f64, f64)> {
    check_base(m)?;
    if !(x > NEAR_ZERO && x < 1.0) {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    check_unit_closed(y, "y")?;
    let a = first_digit(x, m)?;
    let k = f64::from(m - 1);
    let top = inv_pow_f64(m, a);
    let t = ((top / x - 1.0) / k).clamp(0.0, 1.0);
    Ok((t, top / (1.0 + k * y)))
}

/// Exact form of [`natural_extension`]; no near-zero guard is needed.
pub fn natural_extension_exact(x: &ExactRational, y: &ExactRational, m: u32) -> Result<(ExactRational, ExactRational)> {
    check_base(m)?;
    if x.is_zero() || x.is_negative() || *x >= 1 {
        return Err(Error::Domain(format!("x = {x} outside (0, 1)")));
    }
    if y.is_negative() || *y > 1 {
        return Err(Error::Domain(format!("y = {y} outside [0, 1]")));
    }
    let Digit::Finite(a) = digit_first(x, m)? else {
        unreachable!("x > 0 has a finite first digit");
    };
    let k = ExactRational::from_integer(m - 1);
    let second = ExactRational::inverse_power(m, a) / (ExactRational::one() + &k * y);
    Ok((shift(x, m)?, second))
}

/// The inverse map `(w, t) ↦ (m^{-a_1(t)}/(1+(m-1)w), T_m(t))`.
pub fn natural_extension_inverse(w: f64, t: f64, m: u32) -> Result<(f64, f64)> {
    check_base(m)?;
    if !(t > NEAR_ZERO && t < 1.0) {
        return Err(Error::Domain(format!("t = {t} outside (0, 1)")));
    }
    check_unit_closed(w, "w")?;
    let a = first_digit(t, m)?;
    let k = f64::from(m - 1);
    let top = inv_pow_f64(m, a);
    Ok((top / (1.0 + k * w), ((top / t - 1.0) / k).clamp(0.0, 1.0)))
}

/// Float-path guard against digit overflow for points indistinguishable
/// from zero.
pub const NEAR_ZERO: f64 = 1e-300;

fn first_digit(x: f64, m: u32) -> Result<u32> {
    match digit_first_f64(x, m)? {
        Digit::Finite(a) => Ok(a),
        Digit::Terminal => Err(Error::Domain("x = 0 has no first digit".into())),
    }
}

/// Rectangle families whose image under the natural extension is again a
/// rectangle with an explicit form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ExtensionRect {
    /// `(m^{-(i+1)}, m^{-i}) × (c, d)`, mapped onto `(0,1) × (m^{-i}/(1+(m-1)d), m^{-i}/(1+(m-1)c))`.
    Cylinder { i: u32, c: f64, d: f64 },
    /// `(m^{-i}/(1+(m-1)m^{-j}), m^{-i}/(1+(m-1)m^{-(j+1)})) × (c, d)`, mapped onto
    /// `(m^{-(j+1)}, m^{-j}) × (m^{-i}/(1+(m-1)d), m^{-i}/(1+(m-1)c))`.
    SubCylinder { i: u32, j: u32, c: f64, d: f64 },
}

impl ExtensionRect {
    fn y_side(&self) -> (f64, f64) {
        match *self {
            ExtensionRect::Cylinder { c, d, .. } | ExtensionRect::SubCylinder { c, d, .. } => (c, d),
        }
    }

    fn check(&self) -> Result<()> {
        let (c, d) = self.y_side();
        if !(0.0..=1.0).contains(&c) || !(0.0..=1.0).contains(&d) || c >= d {
            return Err(Error::Domain(format!("invalid y-side ({c}, {d})")));
        }
        Ok(())
    }

    /// The rectangle itself.
    pub fn rect(&self, m: u32) -> Rect {
        let k = f64::from(m - 1);
        let (c, d) = self.y_side();
        match *self {
            ExtensionRect::Cylinder { i, .. } => Rect {
                x_lo: inv_pow_f64(m, i + 1),
                x_hi: inv_pow_f64(m, i),
                y_lo: c,
                y_hi: d,
            },
            ExtensionRect::SubCylinder { i, j, .. } => {
                let top = inv_pow_f64(m, i);
                Rect {
                    x_lo: top / (1.0 + k * inv_pow_f64(m, j)),
                    x_hi: top / (1.0 + k * inv_pow_f64(m, j + 1)),
                    y_lo: c,
                    y_hi: d,
                }
            }
        }
    }

    /// The image rectangle under the natural extension.
    pub fn image(&self, m: u32) -> Rect {
        let k = f64::from(m - 1);
        let (c, d) = self.y_side();
        let (x_lo, x_hi, top) = match *self {
            ExtensionRect::Cylinder { i, .. } => (0.0, 1.0, inv_pow_f64(m, i)),
            ExtensionRect::SubCylinder { i, j, .. } => {
                (inv_pow_f64(m, j + 1), inv_pow_f64(m, j), inv_pow_f64(m, i))
            }
        };
        Rect { x_lo, x_hi, y_lo: top / (1.0 + k * d), y_hi: top / (1.0 + k * c) }
    }

    /// Identifies `r` as a member of one of the two families (endpoints must
    /// match to `rel_tol`), searching digits up to `max_digit`.
    pub fn classify(r: &Rect, m: u32, max_digit: u32, rel_tol: f64) -> Result<Self> {
        check_base(m)?;
        let close = |a: f64, b: f64| (a - b).abs() <= rel_tol * a.abs().max(b.abs());
        let (c, d) = (r.y_lo, r.y_hi);
        for i in 0..=max_digit {
            let cyl = ExtensionRect::Cylinder { i, c, d };
            let cr = cyl.rect(m);
            if close(cr.x_lo, r.x_lo) && close(cr.x_hi, r.x_hi) {
                return Ok(cyl);
            }
            for j in 0..=max_digit {
                let sub = ExtensionRect::SubCylinder { i, j, c, d };
                let sr = sub.rect(m);
                if close(sr.x_lo, r.x_lo) && close(sr.x_hi, r.x_hi) {
                    return Ok(sub);
                }
            }
        }
        Err(Error::UnsupportedShape(format!(
            "x-side ({}, {}) is not a rank-1 or rank-2 cylinder for m = {m}",
            r.x_lo, r.x_hi
        )))
    }
}

/// Outcome of comparing `γ̄_m(B)` with `γ̄_m(T̄_m(B))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PreservationReport {
    pub rect: Rect,
    pub image: Rect,
    pub measure_before: f64,
    pub measure_after: f64,
    pub residual: f64,
}

/// Measures a family rectangle and its image under the natural extension.
pub fn check_extension_preserved(b: &ExtensionRect, params: &MeasureParams) -> Result<PreservationReport> {
    b.check()?;
    let rect = b.rect(params.m);
    let image = b.image(params.m);
    let before = params.extended_measure(&rect);
    let after = params.extended_measure(&image);
    Ok(PreservationReport {
        rect,
        image,
        measure_before: before,
        measure_after: after,
        residual: (before - after).abs(),
    })
}

/// [`check_extension_preserved`] for an arbitrary rectangle, which must be
/// one of the supported family members.
pub fn check_rect_preserved(r: &Rect, params: &MeasureParams) -> Result<PreservationReport> {
    let family = ExtensionRect::classify(r, params.m, 64, 1e-14)?;
    check_extension_preserved(&family, params)
}

/// Reference value of `c_m` from an independent formula, for tests.
#[doc(hidden)]
pub fn normalization_naive(m: u32) -> f64 {
    let (mf, k) = (f64::from(m), f64::from(m - 1));
    k * k / (mf * mf / (2.0 * mf - 1.0)).ln()
}

impl Default for MeasureParams {
    fn default() -> Self {
        Self::new(2).expect("m = 2 is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // c_m and the CDF values, evaluated with mpmath at 50 digits
    const C2: f64 = 3.4760594967822067;
    const CDF_HALF_M2: f64 = 0.6337605789617424; // ln(1.2)/ln(4/3)
    const CDF_THIRD_M2: f64 = 0.4641630654510254; // ln(8/7)/ln(4/3)
    const C_TABLE: [f64; 9] = [
        3.4760594967822067,
        6.805190112072547,
        10.886939969099343,
        15.660921511769741,
        21.08594887580195,
        27.131500809256714,
        33.77370378024322,
        40.993166800817285,
        48.773696590563766,
    ];

    #[test]
    fn normalization_constant_within_one_ulp() {
        for (m, &c) in (2u32..=10).zip(C_TABLE.iter()) {
            let p = MeasureParams::new(m).unwrap();
            let ulp = c.next_up() - c;
            assert!((p.c - c).abs() <= ulp, "m = {m}: {} vs {c}", p.c);
        }
    }

    #[test]
    fn density_examples() {
        let p = MeasureParams::new(2).unwrap();
        assert!((p.c - C2).abs() <= f64::EPSILON * C2);
        assert!((p.density(0.0).unwrap() - C2 / 2.0).abs() < 1e-15);
        assert!((p.density(1.0).unwrap() - C2 / 6.0).abs() < 1e-15);
        assert!(p.density(1.5).is_err());
        assert!(p.density(-0.1).is_err());
    }

    #[test]
    fn cdf_examples() {
        let p = MeasureParams::new(2).unwrap();
        assert!((p.cdf(1.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(p.cdf(0.0).unwrap(), 0.0);
        assert!((p.cdf(0.5).unwrap() - CDF_HALF_M2).abs() < 1e-15);
        assert!((p.cdf(1.0 / 3.0).unwrap() - CDF_THIRD_M2).abs() < 1e-15);
        assert!(p.cdf(1.01).is_err());
    }

    #[test]
    fn normalization_all_bases() {
        for m in 2..=10 {
            let p = MeasureParams::new(m).unwrap();
            assert!((p.cdf(1.0).unwrap() - 1.0).abs() <= 1e-14, "m = {m}");
            let naive = normalization_naive(m);
            assert!((p.c - naive).abs() <= 1e-14 * naive, "m = {m}");
        }
    }

    #[test]
    fn preimage_examples() {
        let p2 = MeasureParams::new(2).unwrap();
        let v = p2.shift_preimage_measure(0.5, 1e-12).unwrap();
        assert!((v - CDF_HALF_M2).abs() <= 1e-12);
        let p3 = MeasureParams::new(3).unwrap();
        assert_eq!(p3.shift_preimage_measure(0.0, 1e-12).unwrap(), 0.0);
        assert!((p2.shift_preimage_measure(1.0, 1e-12).unwrap() - 1.0).abs() <= 1e-12);
        assert!(p2.shift_preimage_measure(0.5, 0.0).is_err());
    }

    #[test]
    fn natural_extension_examples() {
        let (t, y) = natural_extension(1.0 / 3.0, 0.0, 2).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (y - 0.5).abs() < 1e-15);
        let (t, y) = natural_extension(1.0 / 3.0, 1.0, 2).unwrap();
        assert!((t - 0.5).abs() < 1e-15 && (y - 0.25).abs() < 1e-15);
        let (x, t) = natural_extension_inverse(0.5, 0.5, 2).unwrap();
        assert!((x - 1.0 / 3.0).abs() < 1e-15 && t.abs() < 1e-15);
        // bases whose inverse powers are exact floats
        for m in [2u32, 4, 8] {
            for i in 1..5 {
                let top = inv_pow_f64(m, i);
                let (x, t) = natural_extension_inverse(0.0, top, m).unwrap();
                assert_eq!((x, t), (top, 0.0));
            }
        }
        assert!(natural_extension(0.0, 0.5, 2).is_err());
        assert!(natural_extension_inverse(0.5, 0.0, 2).is_err());
    }

    #[test]
    fn extended_measure_examples() {
        for m in 2..=10 {
            let p = MeasureParams::new(m).unwrap();
            assert!((p.extended_measure(&Rect::unit()) - 1.0).abs() < 1e-14);
        }
        let p = MeasureParams::new(2).unwrap();
        let left = Rect::new(0.0, 0.5, 0.0, 1.0).unwrap();
        assert!((p.extended_measure(&left) - CDF_HALF_M2).abs() < 1e-14);
        let bottom = Rect::new(0.0, 1.0, 0.0, 1.0 / 3.0).unwrap();
        assert!((p.extended_measure(&bottom) - CDF_THIRD_M2).abs() < 1e-14);
        let flat = Rect::new(0.2, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(p.extended_measure(&flat), 0.0);
    }

    #[test]
    fn preservation_examples() {
        let p2 = MeasureParams::new(2).unwrap();
        let p3 = MeasureParams::new(3).unwrap();
        let cases = [
            (ExtensionRect::Cylinder { i: 0, c: 0.0, d: 1.0 }, p2),
            (ExtensionRect::SubCylinder { i: 0, j: 0, c: 0.25, d: 0.75 }, p2),
            (ExtensionRect::Cylinder { i: 3, c: 0.1, d: 0.2 }, p3),
        ];
        for (b, p) in cases {
            let rep = check_extension_preserved(&b, &p).unwrap();
            assert!(rep.residual <= 1e-12, "{rep:?}");
            assert!(rep.measure_before > 0.0);
        }
    }

    #[test]
    fn classification() {
        let p = MeasureParams::new(3).unwrap();
        let b = ExtensionRect::SubCylinder { i: 2, j: 1, c: 0.3, d: 0.4 };
        let r = b.rect(3);
        assert_eq!(ExtensionRect::classify(&r, 3, 10, 1e-14).unwrap(), b);
        assert!(check_rect_preserved(&r, &p).unwrap().residual < 1e-12);
        let odd = Rect::new(0.1, 0.7, 0.0, 1.0).unwrap();
        assert!(matches!(check_rect_preserved(&odd, &p), Err(Error::UnsupportedShape(_))));
    }

    #[test]
    fn image_corners_follow_the_map() {
        // interior corners of the rectangle land on the image's boundary
        for m in [2u32, 3, 5] {
            let b = ExtensionRect::SubCylinder { i: 1, j: 2, c: 0.2, d: 0.6 };
            let r = b.rect(m);
            let img = b.image(m);
            let eps = 1e-9;
            let (tx, ty) = natural_extension(r.x_hi - eps, r.y_lo, m).unwrap();
            assert!((tx - img.x_lo).abs() < 1e-6 && (ty - img.y_hi).abs() < 1e-12);
            let (tx, ty) = natural_extension(r.x_lo + eps, r.y_hi, m).unwrap();
            assert!((tx - img.x_hi).abs() < 1e-6 && (ty - img.y_lo).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_natural_extension() {
        let f = ExactRational::frac;
        assert_eq!(natural_extension_exact(&f(1, 3), &f(0, 1), 2).unwrap(), (f(1, 2), f(1, 2)));
        assert_eq!(natural_extension_exact(&f(1, 3), &f(1, 1), 2).unwrap(), (f(1, 2), f(1, 4)));
        assert!(natural_extension_exact(&f(0, 1), &f(1, 2), 2).is_err());
        assert!(natural_extension_exact(&f(1, 2), &f(3, 2), 2).is_err());
    }
}

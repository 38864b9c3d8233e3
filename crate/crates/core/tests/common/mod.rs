//! Reference computations that avoid the library's own code paths.
#![allow(dead_code)]

use mcf::ExactRational;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

pub fn inv_pow(m: u32, i: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::from(m).pow(i))
}

/// `[[a_1, ..., a_n, t]]`: the point with digits `a` whose `n`-th shift is
/// `t`, built by composing `t -> m^{-a}/(1 + (m-1)t)` from the right.
pub fn omega(prefix: &[u32], t: &BigRational, m: u32) -> BigRational {
    let k = BigRational::from_integer(BigInt::from(m - 1));
    prefix
        .iter()
        .rev()
        .fold(t.clone(), |acc, &a| inv_pow(m, a) / (BigRational::one() + &k * acc))
}

/// `λ(I(prefix))` as the distance between the images of tails 0 and 1.
pub fn interval_length(prefix: &[u32], m: u32) -> BigRational {
    let a = omega(prefix, &BigRational::zero(), m);
    let b = omega(prefix, &BigRational::one(), m);
    if a > b { a - b } else { b - a }
}

/// `s_1 = 0`, `s_n = (m-1) m^{-a_n} / (1 + s_{n-1})`.
pub fn s_last(prefix: &[u32], m: u32) -> BigRational {
    let k = BigRational::from_integer(BigInt::from(m - 1));
    prefix[1..]
        .iter()
        .fold(BigRational::zero(), |s, &a| &k * inv_pow(m, a) / (BigRational::one() + s))
}

pub fn exact(r: BigRational) -> ExactRational {
    ExactRational::from(r)
}

/// `log(m(kx+1)/(kx+m)) / log(m²/(2m-1))`.
pub fn gamma_cdf_ref(x: f64, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let mf = m as f64;
    (mf * (k * x + 1.0) / (k * x + mf)).ln() / (mf * mf / (2.0 * mf - 1.0)).ln()
}

pub fn gamma_density_ref(x: f64, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let mf = m as f64;
    k * k / (mf * mf / (2.0 * mf - 1.0)).ln() / ((1.0 + k * x) * (mf + k * x))
}

/// `P_i(y)` straight from the defining fraction.
pub fn weight_ref(y: f64, i: u32, m: u32) -> f64 {
    let k = (m - 1) as f64;
    let mf = m as f64;
    let a = mf.powi(-(i as i32));
    let b = mf.powi(-(i as i32 + 1));
    k * b * (y + 1.0) * (y + mf) / ((y + k * a + 1.0) * (y + k * b + 1.0))
}

fn simpson_step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left + right + diff / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson on `[a, b]`, split first at `breaks`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: f64) -> f64 {
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&t| t > a && t < b).collect();
    pts.push(a);
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let pieces = (pts.len() - 1) as f64;
    pts.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            // evaluate strictly inside so one-sided values are used at a jump
            let shrink = (hi - lo) * 1e-15;
            let (fa, fb) = (f(lo + shrink), f(hi - shrink));
            let fm = f(0.5 * (lo + hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / pieces, 40)
        })
        .sum()
}

/// Maximizer of a unimodal function on `[a, b]` by golden-section search.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > tol {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// All digit prefixes of length `1..=max_len` with digits `0..=max_digit`.
pub fn prefixes(max_len: usize, max_digit: u32) -> Vec<Vec<u32>> {
    let mut all = Vec::new();
    let mut layer: Vec<Vec<u32>> = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|p| {
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

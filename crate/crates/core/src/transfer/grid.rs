use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Default node count for uniform grids.
pub const DEFAULT_GRID_SIZE: usize = 4097;
/// Default node count for Chebyshev grids.
pub const DEFAULT_CHEBYSHEV_SIZE: usize = 129;

/// How a [`GridFunction`] is evaluated between its nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Piecewise linear between nodes.
    Linear,
    /// Left-continuous steps: `f(x) = values[j+1]` on `(t_j, t_{j+1}]`, and
    /// `f(0) = values[0]`. The indicator of `(a, 1]` is nodes `[0, a, 1]`
    /// with values `[0, 0, 1]`.
    StepLeft,
    /// Polynomial interpolation through Chebyshev–Lobatto nodes
    /// (barycentric form). Only meaningful for smooth functions.
    Chebyshev,
}

/// A function on `[0, 1]` given by values at nodes `0 = t_0 < ... < t_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    nodes: Vec<f64>,
    values: Vec<f64>,
    interpolation: Interpolation,
}

/// `sin^2(jπ / (2(n-1)))`, the Chebyshev–Lobatto points mapped to `[0, 1]`.
pub fn chebyshev_nodes(n: usize) -> Vec<f64> {
    let denom = 2.0 * (n - 1) as f64;
    (0..n)
        .map(|j| (std::f64::consts::PI * j as f64 / denom).sin().powi(2))
        .collect()
}

pub fn uniform_nodes(n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    nodes[n - 1] = 1.0;
    nodes
}

impl GridFunction {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, interpolation: Interpolation) -> Result<Self> {
        if nodes.len() < 2 || nodes.len() != values.len() {
            return Err(Error::Validation(format!(
                "need >= 2 nodes with one value each, got {} nodes and {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes[0] != 0.0 || nodes[nodes.len() - 1] != 1.0 {
            return Err(Error::Validation("grid must start at 0 and end at 1".into()));
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Validation("nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("values must be finite".into()));
        }
        if interpolation == Interpolation::Chebyshev {
            let expected = chebyshev_nodes(nodes.len());
            if nodes.iter().zip(&expected).any(|(a, b)| (a - b).abs() > 1e-13) {
                return Err(Error::Validation(
                    "Chebyshev interpolation needs Chebyshev–Lobatto nodes".into(),
                ));
            }
        }
        Ok(Self { nodes, values, interpolation })
    }

    /// Samples `f` on `n` uniform nodes, piecewise-linear.
    pub fn uniform(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::sampled(uniform_nodes(n.max(2)), Interpolation::Linear, f)
    }

    /// Samples `f` on `n` Chebyshev–Lobatto nodes.
    pub fn chebyshev(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::sampled(chebyshev_nodes(n.max(2)), Interpolation::Chebyshev, f)
    }

    /// A left-continuous step function with jumps at `breaks` (strictly
    /// inside `(0, 1)`, increasing); `levels` has one entry per piece,
    /// `breaks.len() + 1` in total.
    pub fn step(breaks: &[f64], levels: &[f64]) -> Result<Self> {
        if levels.len() != breaks.len() + 1 {
            return Err(Error::Validation("need one level per piece".into()));
        }
        let mut nodes = Vec::with_capacity(breaks.len() + 2);
        nodes.push(0.0);
        nodes.extend_from_slice(breaks);
        nodes.push(1.0);
        let mut values = Vec::with_capacity(nodes.len());
        values.push(levels[0]);
        values.extend_from_slice(levels);
        Self::new(nodes, values, Interpolation::StepLeft)
    }

    pub fn sampled(nodes: Vec<f64>, interpolation: Interpolation, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&x| f(x)).collect();
        Self::new(nodes, values, interpolation)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Evaluates at `x`, clamped into `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self.interpolation {
            Interpolation::Linear => {
                let idx = self.nodes.partition_point(|&t| t < x);
                if idx == 0 {
                    return self.values[0];
                }
                let (t0, t1) = (self.nodes[idx - 1], self.nodes[idx]);
                let (v0, v1) = (self.values[idx - 1], self.values[idx]);
                v0 + (v1 - v0) * ((x - t0) / (t1 - t0))
            }
            Interpolation::StepLeft => {
                let idx = self.nodes.partition_point(|&t| t < x);
                self.values[idx]
            }
            Interpolation::Chebyshev => self.barycentric(x),
        }
    }

    fn barycentric(&self, x: f64) -> f64 {
        let last = self.nodes.len() - 1;
        let (mut num, mut den) = (0.0, 0.0);
        for (j, (&t, &v)) in self.nodes.iter().zip(&self.values).enumerate() {
            let diff = x - t;
            if diff == 0.0 {
                return v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == last {
                w *= 0.5;
            }
            let c = w / diff;
            num += c * v;
            den += c;
        }
        num / den
    }

    /// `Σ |f(t_j) - f(t_{j-1})|` over the nodes: a lower bound for the total
    /// variation that converges under refinement for piecewise-monotone `f`.
    pub fn variation(&self) -> f64 {
        self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Same nodes and interpolation, values mapped pointwise.
    pub fn map_values(&self, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = self.nodes.iter().zip(&self.values).map(|(&x, &v)| f(x, v)).collect();
        Self { nodes: self.nodes.clone(), values, interpolation: self.interpolation }
    }

    /// Breakpoints at which the interpolant is not smooth.
    pub(crate) fn kinks(&self) -> &[f64] {
        match self.interpolation {
            Interpolation::Chebyshev => &[],
            _ => &self.nodes[1..self.nodes.len() - 1],
        }
    }

    /// `∫_0^1 f`.
    pub fn integral(&self) -> f64 {
        self.weighted_cumulative(&[1.0], |_| 1.0)[0]
    }

    /// `∫_0^{x} f(u) w(u) du` at each of the sorted points `xs`, integrating
    /// panel by panel between consecutive kinks and query points.
    pub fn weighted_cumulative(&self, xs: &[f64], weight: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut breaks: Vec<f64> = self.kinks().to_vec();
        breaks.extend(xs.iter().map(|x| x.clamp(0.0, 1.0)));
        breaks.push(0.0);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let integrand = |u: f64| self.eval(u) * weight(u);
        // the step interpolant is discontinuous at the panel ends: evaluate
        // strictly inside each panel
        let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-14, max_panels: 200 };
        let mut cumulative = Vec::with_capacity(breaks.len());
        let mut acc = 0.0;
        cumulative.push((0.0, 0.0));
        for w in breaks.windows(2) {
            let part = match integrate(integrand, w[0], w[1], opts) {
                Ok(r) => r.value,
                Err(Error::Quadrature { estimate, .. }) => estimate,
                Err(_) => unreachable!("integrate only fails with quadrature errors"),
            };
            acc += part;
            cumulative.push((w[1], acc));
        }
        xs.iter()
            .map(|&x| {
                let x = x.clamp(0.0, 1.0);
                let idx = cumulative.partition_point(|&(b, _)| b < x);
                cumulative[idx.min(cumulative.len() - 1)].1
            })
            .collect()
    }
}

/// Inserts `extra` points into sorted `nodes`, dropping duplicates and
/// points outside `[0, 1]`.
pub(crate) fn merge_nodes(nodes: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = nodes
        .iter()
        .chain(extra)
        .copied()
        .filter(|x| (0.0..=1.0).contains(x))
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(GridFunction::new(vec![0.0, 1.0], vec![1.0], Interpolation::Linear).is_err());
        assert!(GridFunction::new(vec![0.0, 0.5], vec![1.0, 2.0], Interpolation::Linear).is_err());
        assert!(GridFunction::new(vec![0.0, 0.5, 0.5, 1.0], vec![1.0; 4], Interpolation::Linear).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![f64::NAN, 1.0], Interpolation::Linear).is_err());
        assert!(GridFunction::new(vec![0.0, 0.3, 1.0], vec![1.0; 3], Interpolation::Chebyshev).is_err());
        assert!(GridFunction::new(vec![0.0, 0.5, 1.0], vec![1.0; 3], Interpolation::Chebyshev).is_ok());
    }

    #[test]
    fn step_is_left_continuous() {
        let f = GridFunction::step(&[0.5], &[0.0, 1.0]).unwrap();
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.5), 0.0);
        assert_eq!(f.eval(0.5f64.next_up()), 1.0);
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.variation(), 1.0);
        assert!((f.integral() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn variation_examples() {
        let c = GridFunction::uniform(33, |_| 2.5).unwrap();
        assert_eq!(c.variation(), 0.0);
        for n in [2, 17, 4097] {
            let id = GridFunction::uniform(n, |x| x).unwrap();
            assert!((id.variation() - 1.0).abs() < 1e-15);
        }
        let zigzag = GridFunction::uniform(5, |x| if (x * 4.0).round() as i32 % 2 == 0 { 0.0 } else { 1.0 }).unwrap();
        assert_eq!(zigzag.variation(), 4.0);
    }

    #[test]
    fn chebyshev_reproduces_polynomials() {
        let p = |x: f64| 3.0 * x.powi(4) - x * x + 0.25;
        let f = GridFunction::chebyshev(9, p).unwrap();
        for x in [0.0, 0.013, 0.37, 0.5, 0.91, 1.0] {
            assert!((f.eval(x) - p(x)).abs() < 1e-14);
        }
        assert!((f.integral() - (0.6 - 1.0 / 3.0 + 0.25)).abs() < 1e-14);
    }

    #[test]
    fn chebyshev_resolves_rational_functions() {
        let g = |x: f64| 1.0 / ((1.0 + 9.0 * x) * (10.0 + 9.0 * x));
        let f = GridFunction::chebyshev(DEFAULT_CHEBYSHEV_SIZE, g).unwrap();
        let worst = (0..=1000).map(|j| j as f64 / 1000.0).map(|x| (f.eval(x) - g(x)).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-15, "{worst}");
    }

    #[test]
    fn cumulative_integrals() {
        let f = GridFunction::uniform(101, |x| x).unwrap();
        let xs = [0.0, 0.25, 0.333, 1.0];
        let got = f.weighted_cumulative(&xs, |_| 1.0);
        for (x, g) in xs.iter().zip(got) {
            assert!((g - x * x / 2.0).abs() < 1e-15);
        }
        let weighted = f.weighted_cumulative(&[1.0], |u| 1.0 / (1.0 + u))[0];
        assert!((weighted - (1.0 - 2f64.ln())).abs() < 1e-14);
    }
}

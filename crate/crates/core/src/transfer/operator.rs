use rayon::prelude::*;
use serde::Serialize;

use super::grid::{merge_nodes, uniform_nodes, GridFunction, Interpolation, DEFAULT_GRID_SIZE};
use super::weights::{inverse_branch_unchecked, weight_unchecked, WeightParams, DEFAULT_TAIL_TOL};
use crate::error::{check_base, Error, Result};
use crate::rational::ExactRational;
use crate::util::inv_pow_f64;

/// Offset of the left-limit node placed before each jump image.
const LEFT_LIMIT_GAP: f64 = 1e-13;

/// `Σ_{i <= N} P_i((m-1)x) f(u_i(x))`, summed from the highest branch down.
pub fn pf_eval<F: Fn(f64) -> f64>(f: &F, x: f64, params: &WeightParams) -> f64 {
    let m = params.m;
    let y = (m - 1) as f64 * x;
    (0..=params.max_branch)
        .rev()
        .map(|i| weight_unchecked(y, i, m) * f(inverse_branch_unchecked(x, i, m)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PfMetadata {
    pub m: u32,
    pub tail_tol: f64,
    pub max_branch: u32,
    /// Bound on the neglected branches: `tail_mass(0, N) * sup|f|`.
    pub tail_bound: f64,
}

/// The image of a grid function under the operator.
#[derive(Debug, Clone, PartialEq)]
pub struct PfImage {
    pub function: GridFunction,
    pub metadata: PfMetadata,
}

/// Points `x` in `(0, 1]` where `u_i(x) = s` for some branch `i`, each with
/// a companion just to its left.
fn jump_images(jumps: &[f64], params: &WeightParams) -> Vec<f64> {
    branch_images(jumps, params, true)
}

fn branch_images(points: &[f64], params: &WeightParams, companions: bool) -> Vec<f64> {
    let m = params.m;
    let k = (m - 1) as f64;
    let mut out = Vec::new();
    for &s in points {
        for i in 0..=params.max_branch {
            let mut d = (inv_pow_f64(m, i) / s - 1.0) / k;
            if d > 1.0 && d < 1.0 + 1e-12 {
                d = 1.0;
            }
            if d > LEFT_LIMIT_GAP && d <= 1.0 {
                out.push(d);
                if companions {
                    out.push(d - LEFT_LIMIT_GAP);
                }
            }
        }
    }
    out
}

/// Points where `f` is not smooth, and whether they are jumps.
fn singular_points(f: &GridFunction) -> (Vec<f64>, bool) {
    match f.interpolation() {
        Interpolation::StepLeft => (step_jumps(f), true),
        Interpolation::Linear => (f.kinks().to_vec(), false),
        Interpolation::Chebyshev => (Vec::new(), false),
    }
}

/// Interior points where a step function changes value.
fn step_jumps(f: &GridFunction) -> Vec<f64> {
    let nodes = f.nodes();
    let values = f.values();
    (1..nodes.len() - 1)
        .filter(|&j| values[j] != values[j + 1])
        .map(|j| nodes[j])
        .collect()
}

/// Output nodes and interpolation for the image of `f`.
fn image_grid(f: &GridFunction, params: &WeightParams, grid_size: usize) -> (Vec<f64>, Interpolation) {
    match f.interpolation() {
        Interpolation::StepLeft => {
            let extra = jump_images(&step_jumps(f), params);
            (merge_nodes(&uniform_nodes(grid_size.max(2)), &extra), Interpolation::Linear)
        }
        interp => (f.nodes().to_vec(), interp),
    }
}

/// Evaluates the operator image of an arbitrary function on the given nodes.
pub fn pf_apply_closure<F: Fn(f64) -> f64 + Sync>(
    f: &F,
    params: &WeightParams,
    nodes: Vec<f64>,
    interpolation: Interpolation,
) -> Result<GridFunction> {
    let values: Vec<f64> = nodes.par_iter().map(|&x| pf_eval(f, x, params)).collect();
    GridFunction::new(nodes, values, interpolation)
}

/// Applies the operator to `f`.
///
/// Linear and Chebyshev inputs keep their nodes. A step input produces a
/// piecewise-linear image on the default uniform grid, refined with every
/// point where a branch image crosses a jump of `f`, plus a node just left
/// of it so both one-sided limits are present.
pub fn pf_apply(f: &GridFunction, params: &WeightParams) -> Result<PfImage> {
    pf_apply_sized(f, params, DEFAULT_GRID_SIZE)
}

/// [`pf_apply`] with a uniform base grid of `grid_size` nodes for step inputs.
pub fn pf_apply_sized(f: &GridFunction, params: &WeightParams, grid_size: usize) -> Result<PfImage> {
    let (nodes, interp) = image_grid(f, params, grid_size);
    pf_apply_on(f, params, nodes, interp)
}

/// Applies the operator to `f`, evaluating the image on caller-chosen nodes.
pub fn pf_apply_on(
    f: &GridFunction,
    params: &WeightParams,
    nodes: Vec<f64>,
    interpolation: Interpolation,
) -> Result<PfImage> {
    let eval = |u: f64| f.eval(u);
    let function = pf_apply_closure(&eval, params, nodes, interpolation)?;
    let metadata = PfMetadata {
        m: params.m,
        tail_tol: params.tail_tol,
        max_branch: params.max_branch,
        tail_bound: params.tail_bound() * f.sup_abs(),
    };
    Ok(PfImage { function, metadata })
}

/// `n` applications of the operator.
///
/// Jumps and kinks of `f` reappear in `U^j f` at their `j`-th shift images;
/// these are tracked and added as nodes at every step, with left-limit
/// companions for jumps. A jump is carried as the two ends of its steep
/// segment, both mapped forward, since the shift reverses orientation
/// within each branch. The reported tail bound is the sum over the steps.
pub fn pf_iterate(f: &GridFunction, params: &WeightParams, n: usize, grid_size: usize) -> Result<PfImage> {
    if n == 0 {
        let metadata = PfMetadata {
            m: params.m,
            tail_tol: params.tail_tol,
            max_branch: params.max_branch,
            tail_bound: 0.0,
        };
        return Ok(PfImage { function: f.clone(), metadata });
    }
    let mut img = pf_apply_sized(f, params, grid_size)?;
    let (singular, jumps) = singular_points(f);
    let mut singular = branch_images(&singular, params, jumps);
    for _ in 1..n {
        singular = branch_images(&singular, params, false);
        let next = next_image(&img.function, &singular, params)?;
        let tail_bound = img.metadata.tail_bound + next.metadata.tail_bound;
        img = PfImage { function: next.function, metadata: PfMetadata { tail_bound, ..next.metadata } };
    }
    Ok(img)
}

/// `U g` on the nodes of `g` plus the singular points of the image.
fn next_image(g: &GridFunction, singular: &[f64], params: &WeightParams) -> Result<PfImage> {
    let nodes = merge_nodes(g.nodes(), singular);
    pf_apply_on(g, params, nodes, g.interpolation())
}

/// `Σ |f(t_j) - f(t_{j-1})|` over the nodes of `f`.
///
/// This is a lower bound for the total variation; it converges to it under
/// refinement when `f` is piecewise monotone.
pub fn variation(f: &GridFunction) -> f64 {
    f.variation()
}

/// `K_m = (m-1)(3m²-3m+1) / ((2m-1)(m²+m-1))`.
pub fn variation_bound_constant(m: u32) -> Result<ExactRational> {
    check_base(m)?;
    let m = i64::from(m);
    Ok(ExactRational::frac(
        (m - 1) * (3 * m * m - 3 * m + 1),
        (2 * m - 1) * (m * m + m - 1),
    ))
}

/// `(1 + (m-1)x)(m + (m-1)x)`, the reciprocal of the invariant density up
/// to its normalizing constant.
pub(crate) fn lift_factor(x: f64, m: u32) -> f64 {
    let k = (m - 1) as f64;
    (1.0 + k * x) * (m as f64 + k * x)
}

/// Iterates a start density under the operator and reads off the
/// distribution function of `T^{-n}`.
///
/// With `f = h0 / ρ` (ρ the invariant density up to scale), the law of
/// `T^{-n}([0, x))` under `h0 dx` is `∫_0^x U^n f(u) / ((1+(m-1)u)(m+(m-1)u)) du`.
#[derive(Debug, Clone)]
pub struct DensityEvolution {
    params: WeightParams,
    start: GridFunction,
    current: Option<GridFunction>,
    step: usize,
    /// Shift images of the start's jumps or kinks, singular in the current image.
    singular: Vec<f64>,
    jumps: bool,
}

impl DensityEvolution {
    pub fn new(h0: GridFunction, params: WeightParams) -> Result<Self> {
        if h0.min_value() < -1e-12 {
            return Err(Error::Validation("start density must be nonnegative".into()));
        }
        let mass = h0.integral();
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Validation(format!("start density integrates to {mass}, not 1")));
        }
        let (singular, jumps) = singular_points(&h0);
        Ok(Self { params, start: h0, current: None, step: 0, singular, jumps })
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn params(&self) -> &WeightParams {
        &self.params
    }

    /// `U^n f` on its grid, `None` before the first step.
    pub fn lifted(&self) -> Option<&GridFunction> {
        self.current.as_ref()
    }

    pub fn advance(&mut self) -> Result<()> {
        let m = self.params.m;
        let next = match &self.current {
            None => {
                // the first step sees the exact lift of the start density
                let start = &self.start;
                let lifted = |u: f64| lift_factor(u, m) * start.eval(u);
                let (nodes, interp) = match start.interpolation() {
                    Interpolation::Linear => {
                        // the image bends wherever a branch meets a kink of the start
                        let mut extra = uniform_nodes(DEFAULT_GRID_SIZE);
                        extra.extend(branch_images(start.kinks(), &self.params, false));
                        (merge_nodes(start.nodes(), &extra), Interpolation::Linear)
                    }
                    _ => image_grid(start, &self.params, DEFAULT_GRID_SIZE),
                };
                self.singular = branch_images(&self.singular, &self.params, self.jumps);
                pf_apply_closure(&lifted, &self.params, nodes, interp)?
            }
            Some(f) => {
                self.singular = branch_images(&self.singular, &self.params, false);
                next_image(f, &self.singular, &self.params)?.function
            }
        };
        self.current = Some(next);
        self.step += 1;
        Ok(())
    }

    pub fn advance_to(&mut self, n: usize) -> Result<()> {
        while self.step < n {
            self.advance()?;
        }
        Ok(())
    }

    /// `μ(T^{-n}([0, x)))` at each of the sorted points `xs`.
    pub fn cdf_on(&self, xs: &[f64]) -> Vec<f64> {
        let m = self.params.m;
        match &self.current {
            None => self.start.weighted_cumulative(xs, |_| 1.0),
            Some(f) => f.weighted_cumulative(xs, |u| 1.0 / lift_factor(u, m)),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_on(&[x])[0]
    }
}

/// `μ(T^{-n}([0, x)))` for the start density `h0`.
pub fn density_evolution(h0: &GridFunction, n: usize, m: u32, x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    let mut evo = DensityEvolution::new(h0.clone(), WeightParams::new(m, DEFAULT_TAIL_TOL)?)?;
    evo.advance_to(n)?;
    Ok(evo.cdf(x))
}

//! The transfer (Perron–Frobenius) operator of the shift under the invariant
//! measure:
//!
//! ```text
//! U f(x) = Σ_i P_i((m-1)x) f(u_i(x)),   u_i(x) = m^{-i} / (1 + (m-1)x)
//! ```
//!
//! together with density evolution and the variation functional.

mod grid;
mod operator;
mod weights;

pub use grid::{
    chebyshev_nodes, uniform_nodes, GridFunction, Interpolation, DEFAULT_CHEBYSHEV_SIZE,
    DEFAULT_GRID_SIZE,
};
pub use operator::{
    density_evolution, pf_apply, pf_apply_closure, pf_apply_on, pf_apply_sized, pf_eval, pf_iterate,
    variation,
    variation_bound_constant, DensityEvolution, PfImage, PfMetadata,
};
pub(crate) use weights::{inverse_branch_unchecked, tail_from, weight_unchecked};
pub use weights::{inverse_branch, tail_mass, weight, WeightParams, DEFAULT_TAIL_TOL};

//! Monotone wide-stencil Monge-Ampère operator and related calculus.

mod convexity;
mod det_root;
pub(crate) mod geometry;
mod measure;
mod operator;
mod stencil;

pub use convexity::{
    convexity_defect_box, convexity_defect_periodic, ConvexGridFunction, DEFAULT_TOL_CONVEX,
};
pub use det_root::{concavity_gap, det_root, det_root_grad};
pub use measure::{subdifferential_measure, NodeMeasure};
pub use operator::{
    linearize_box, linearize_periodic, ma_operator_box, ma_operator_periodic, LinearizedCoeffs,
    LinearizedRow, MaEvaluation, FACTOR_FLOOR_REL,
};
pub(crate) use operator::periodic_geometry;
pub use stencil::{Direction, StencilSet};

/// `build_stencil(n, W)`.
pub fn build_stencil(n: usize, width: usize) -> crate::error::Result<StencilSet> {
    StencilSet::new(n, width)
}

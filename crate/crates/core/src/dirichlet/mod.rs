//! Dirichlet problems `det D²u = f` on convex domains, sections and their normalization.

mod domain;
mod sections;
mod solver;

pub use domain::ConvexDomain;
pub use sections::{john_normalize, mvee, section_rescale, sublevel_set, JohnMap, SublevelSet, JOHN_SLACK};
pub use solver::{
    dirichlet_residual, hoelder_quotient_box, solve_dirichlet, BoundaryData, DirichletProblem, PointFn, RhsSource,
};

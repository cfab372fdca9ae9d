//! Sections `{u < M}` of a solution and their John normalization.

use ma_core::dirichlet::{john_normalize, section_rescale, solve_dirichlet, sublevel_set};
use ma_core::dirichlet::{BoundaryData, ConvexDomain, DirichletProblem, RhsSource};
use ma_core::lattice::BoxLattice;
use ma_core::periodic::SolveOptions;
use ma_core::QuadraticPart;

fn main() -> ma_core::Result<()> {
    let q = QuadraticPart::new(
        nalgebra::DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 1.0]),
        nalgebra::DVector::from_vec(vec![0.5, 0.0]),
        0.0,
    )?;
    let domain = ConvexDomain::rectangle([-2.0, -2.0], [2.0, 2.0])?;
    let problem = DirichletProblem::new(domain, 0.0625, RhsSource::Constant(q.det()), BoundaryData::Quadratic(q))?;
    let (u, _) = solve_dirichlet(&problem, &SolveOptions::default())?;

    let target = BoxLattice::centered(2, 1.0, 0.125)?;
    for m in [0.25, 0.5, 0.75] {
        let section = sublevel_set(&u.field, m)?;
        let john = john_normalize(&section.domain)?;
        let rescaled = section_rescale(&u.field, &john, john.r, &target)?;
        let (hi, lo) = rescaled.extrema_in_box(0.5).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "M = {m}: {} hull vertices, R = {:.4}, inner/outer radius {:.4}/{:.4}, rescaled range on B_1/2 [{lo:.4}, {hi:.4}]",
            section.domain.vertices().len(),
            john.r,
            john.inner_radius,
            john.outer_radius,
        );
    }
    Ok(())
}

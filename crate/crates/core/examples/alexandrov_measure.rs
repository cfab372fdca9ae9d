//! Discrete Monge-Ampère measure of a computed solution compared with `∫f`.

use ma_core::dirichlet::{solve_dirichlet, BoundaryData, ConvexDomain, DirichletProblem, RhsSource};
use ma_core::discrete_ma::subdifferential_measure;
use ma_core::periodic::SolveOptions;
use ma_core::QuadraticPart;

fn main() -> ma_core::Result<()> {
    // det D²u = 2 on a square with data from u = ½xᵀAx, det A = 2
    let q = QuadraticPart::diagonal(&[2.0, 1.0])?;
    let domain = ConvexDomain::rectangle([-1.0, -1.0], [1.0, 1.0])?;
    for h in [0.125, 0.0625, 0.03125] {
        let problem = DirichletProblem::new(domain.clone(), h, RhsSource::Constant(2.0), BoundaryData::Quadratic(q.clone()))?;
        let (u, _) = solve_dirichlet(&problem, &SolveOptions::default())?;
        let measure = subdifferential_measure(&u.field)?;
        // interior nodes own cells that cover [-1 + h/2, 1 - h/2]²
        let side = 2.0 - h;
        let exact = 2.0 * side * side;
        println!("h = {h:<8} mass {:.6}  integral {:.6}  interior nodes {}", measure.total(), exact, measure.interior_count());
    }
    Ok(())
}

//! Dirichlet solver against the radial solution `u = |x|⁴/4` on a disk-like polygon.

use std::sync::Arc;

use ma_core::dirichlet::{solve_dirichlet, BoundaryData, ConvexDomain, DirichletProblem, RhsSource};
use ma_core::periodic::SolveOptions;
use ma_core::problems::{radial_rhs, radial_solution};

fn main() -> ma_core::Result<()> {
    let domain = ConvexDomain::regular_polygon([0.0, 0.0], 1.0, 32, 0.0)?;
    println!("{:>9} {:>8} {:>6} {:>12}", "h", "nodes", "iters", "max error");
    for h in [0.125, 0.0625, 0.03125] {
        let problem = DirichletProblem::new(
            domain.clone(),
            h,
            RhsSource::Function(Arc::new(radial_rhs)),
            BoundaryData::Function(Arc::new(radial_solution)),
        )?;
        let (u, report) = solve_dirichlet(&problem, &SolveOptions::default())?;
        let lat = u.field.lattice();
        let err = (0..lat.len())
            .filter_map(|i| u.field.get(i).map(|v| (v - radial_solution(&lat.coord(i))).abs()))
            .fold(0.0, f64::max);
        println!("{h:>9.5} {:>8} {:>6} {err:>12.3e}", u.field.active_count(), report.iterations);
    }
    Ok(())
}

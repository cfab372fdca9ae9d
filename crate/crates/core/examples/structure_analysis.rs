//! Entire solutions built from a periodic solve, and the structure diagnostics run on them.

use ma_core::lattice::{BoxLattice, TorusLattice};
use ma_core::periodic::{solve_periodic, PeriodicProblem, SolveOptions};
use ma_core::problems::cosine_1d;
use ma_core::structure::{analyze, reconstruct_entire, synthesize_entire, AnalysisOptions};
use ma_core::QuadraticPart;
use nalgebra::{DMatrix, DVector};

fn main() -> ma_core::Result<()> {
    let f = cosine_1d(TorusLattice::unit(2, 16)?, 0.5)?;
    let a = QuadraticPart::identity(2);
    let (v, _, _) = solve_periodic(&PeriodicProblem::new(a, f.clone())?, &SolveOptions::default())?;
    let q = QuadraticPart::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.3, -0.2]), 0.5)?;

    let synthesized = synthesize_entire(&q, &v, &BoxLattice::centered(2, 8.0, 0.125)?)?;
    let report = analyze(&synthesized, &AnalysisOptions::default())?;
    println!("synthesized: A = {:?}, b = {:?}", report.a_matrix, report.b_vector);
    println!("  largest quotient gap {:.2e}, h constancy {:.2e}", report.max_gap, report.h_constancy);

    let opts = AnalysisOptions { inner: 1.0, boxes: vec![1.0, 2.0, 3.0], radii: vec![1.0, 2.0, 3.0], lambdas: vec![2.0, 4.0], ..Default::default() };
    for l in [4.0, 6.0] {
        let (sample, _) = reconstruct_entire(&f, &q, l, 0.125, &SolveOptions::default())?;
        let r = analyze(&sample, &opts)?;
        let spreads: Vec<String> = r.h_stats.iter().map(|b| format!("{:.2e}", b.spread)).collect();
        println!("reconstructed L = {l}: b = {:?}, h spread per box [{}]", r.b_vector, spreads.join(", "));
    }
    Ok(())
}

//! Periodic cell problem `det(A + D²v) = f + σ` on the torus.

mod continuation;
mod hoelder;
mod residual;

pub use continuation::{mollified_continuation, ContinuationReport, StageRecord};
pub use hoelder::{hoelder_quotient_periodic, HOELDER_SAMPLE_CAP};
pub use residual::residual;

use log::info;
use serde::{Deserialize, Serialize};

use crate::discrete_ma::{convexity_defect_periodic, periodic_geometry, StencilSet, FACTOR_FLOOR_REL};
use crate::discrete_ma::geometry::Geometry;
use crate::error::{invalid, MaError, Result};
use crate::lattice::{PeriodicField, ProblemBounds, TorusLattice};
use crate::newton::{self, NewtonSettings, NonlinearSystem};
use crate::quadratic::QuadraticPart;
use crate::sparse::TripletMatrix;

/// Largest relative mismatch between `det A` and the cell average of `f` accepted by the solver.
pub const COMPATIBILITY_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicProblem {
    pub a: QuadraticPart,
    pub f: PeriodicField,
    pub bounds: ProblemBounds,
}

impl PeriodicProblem {
    pub fn new(a: QuadraticPart, f: PeriodicField) -> Result<Self> {
        if a.dim() != f.lattice().dim() {
            return invalid(format!("A is {0}x{0} but the lattice has dimension {1}", a.dim(), f.lattice().dim()));
        }
        if !a.is_positive_definite() {
            return invalid("A must be positive definite");
        }
        let bounds = f.require_positive()?;
        Ok(Self { a, f, bounds })
    }

    pub fn lattice(&self) -> &TorusLattice {
        self.f.lattice()
    }
}

/// How the additive constant of `v` is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnchorMode {
    MeanZero,
    ValueAtOrigin(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Residual target relative to `‖f‖∞`.
    pub tol_residual: f64,
    pub max_newton: usize,
    pub armijo: f64,
    pub max_halvings: usize,
    pub anchor: AnchorMode,
    pub width: usize,
    /// Starting iterate; `None` means `v = 0`.
    pub initial_guess: Option<Vec<f64>>,
    /// Retry through mollified continuation when Newton from `v = 0` stalls.
    pub continuation_fallback: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_newton: 200,
            armijo: 1e-4,
            max_halvings: 60,
            anchor: AnchorMode::MeanZero,
            width: 2,
            initial_guess: None,
            continuation_fallback: true,
        }
    }
}

impl SolveOptions {
    pub(crate) fn settings(&self, scale: f64) -> Result<NewtonSettings> {
        if !(self.tol_residual > 0.0 && self.armijo > 0.0 && self.armijo < 0.5) {
            return invalid("tolerances must be positive and the Armijo factor below 1/2");
        }
        Ok(NewtonSettings {
            tol: self.tol_residual * scale,
            max_iter: self.max_newton,
            armijo: self.armijo,
            max_halvings: self.max_halvings,
        })
    }
}

/// Solver diagnostics; the JSON field names are part of the report format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual_inf: f64,
    pub sigma: f64,
    pub floored_nodes: usize,
    pub convexity_defect: f64,
    pub hoelder_q25: f64,
    pub hoelder_q50: f64,
}

/// `|det A − ⨍f| / det A`.
pub fn check_compatibility(a: &QuadraticPart, f: &PeriodicField) -> f64 {
    let d = a.det();
    (d - f.cell_average()).abs() / d
}

/// Deviation of `v1 − v2` from a constant, `‖(v1 − v2) − mean‖∞`.
pub fn compare_solutions(v1: &PeriodicField, v2: &PeriodicField) -> Result<f64> {
    if v1.lattice() != v2.lattice() {
        return invalid("solutions live on different lattices");
    }
    let diff: Vec<f64> = v1.values().iter().zip(v2.values()).map(|(a, b)| a - b).collect();
    let mean = diff.iter().sum::<f64>() / diff.len() as f64;
    Ok(diff.iter().fold(0.0, |m, d| m.max((d - mean).abs())))
}

struct CellSystem<'a> {
    geom: Geometry,
    f: &'a [f64],
    anchor: AnchorMode,
}

impl NonlinearSystem for CellSystem<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let n = self.f.len();
        let (v, sigma) = (&x[..n], x[n]);
        let mut out: Vec<f64> = self.geom.eval(v).iter().zip(self.f).map(|(r, f)| r.value - f - sigma).collect();
        out.push(match self.anchor {
            AnchorMode::MeanZero => v.iter().sum::<f64>() / n as f64,
            AnchorMode::ValueAtOrigin(c) => v[0] - c,
        });
        out
    }

    fn jacobian(&self, x: &[f64]) -> TripletMatrix {
        let n = self.f.len();
        let v = &x[..n];
        let values = self.geom.eval(v);
        let cols: Vec<Option<usize>> = (0..n).map(Some).collect();
        let mut m = TripletMatrix::with_capacity(n + 1, n * 12);
        self.geom.assemble_jacobian(v, &values, &cols, 0, &mut m);
        for i in 0..n {
            m.push(i, n, -1.0);
        }
        match self.anchor {
            AnchorMode::MeanZero => (0..n).for_each(|j| m.push(n, j, 1.0 / n as f64)),
            AnchorMode::ValueAtOrigin(_) => m.push(n, 0, 1.0),
        }
        m
    }
}

pub(crate) fn newton_solve(problem: &PeriodicProblem, options: &SolveOptions, x0: Vec<f64>) -> Result<(Vec<f64>, f64, usize, f64)> {
    let stencil = StencilSet::new(problem.lattice().dim(), options.width)?;
    let geom = periodic_geometry(problem.lattice(), &problem.a, &stencil, FACTOR_FLOOR_REL);
    // A dense mean row ruins the sparse factorization, so pin one node and shift afterwards.
    let anchor = match options.anchor {
        AnchorMode::MeanZero => AnchorMode::ValueAtOrigin(x0[0]),
        a => a,
    };
    let sys = CellSystem { geom, f: problem.f.values(), anchor };
    let settings = options.settings(problem.f.sup_norm())?;
    let out = newton::solve(&sys, x0, &settings)?;
    let n = problem.f.values().len();
    let sigma = out.x[n];
    let mut v = out.x;
    v.truncate(n);
    if matches!(options.anchor, AnchorMode::MeanZero) {
        let mean = v.iter().sum::<f64>() / n as f64;
        v.iter_mut().for_each(|x| *x -= mean);
    }
    Ok((v, sigma, out.iterations, out.residual_inf))
}

pub(crate) fn build_report(
    problem: &PeriodicProblem,
    options: &SolveOptions,
    v: &PeriodicField,
    sigma: f64,
    iterations: usize,
) -> Result<SolveReport> {
    let stencil = StencilSet::new(problem.lattice().dim(), options.width)?;
    let res = residual(problem, v, sigma, options.width)?;
    let ev = crate::discrete_ma::ma_operator_periodic(v, &problem.a, &stencil)?;
    Ok(SolveReport {
        iterations,
        residual_inf: res.sup_norm(),
        sigma,
        floored_nodes: ev.floored_nodes(),
        convexity_defect: convexity_defect_periodic(v, &problem.a, &stencil)?,
        hoelder_q25: hoelder_quotient_periodic(v, 0.25),
        hoelder_q50: hoelder_quotient_periodic(v, 0.5),
    })
}

/// Solves the cell problem; returns `v`, the ergodic constant `σ` and the report.
pub fn solve_periodic(problem: &PeriodicProblem, options: &SolveOptions) -> Result<(PeriodicField, f64, SolveReport)> {
    let defect = check_compatibility(&problem.a, &problem.f);
    if defect > COMPATIBILITY_LIMIT {
        return Err(MaError::Infeasible { defect, limit: COMPATIBILITY_LIMIT });
    }
    let n = problem.f.values().len();
    let mut x0 = match &options.initial_guess {
        Some(g) if g.len() == n => g.clone(),
        Some(g) => return invalid(format!("initial guess has {} values for {n} nodes", g.len())),
        None => vec![0.0; n],
    };
    x0.push(0.0);
    match newton_solve(problem, options, x0) {
        Ok((v, sigma, iterations, _)) => {
            let v = PeriodicField::new(problem.lattice().clone(), v)?;
            let report = build_report(problem, options, &v, sigma, iterations)?;
            info!("periodic solve converged in {iterations} iterations, sigma = {sigma:.3e}");
            Ok((v, sigma, report))
        }
        Err(MaError::NonConvergence { .. }) if options.continuation_fallback && options.initial_guess.is_none() => {
            info!("Newton from v = 0 stalled; retrying through mollified continuation");
            let h = problem.lattice().max_spacing();
            let schedule = [8.0 * h, 4.0 * h, 2.0 * h];
            let mut inner = options.clone();
            inner.continuation_fallback = false;
            let (v, report) = mollified_continuation(problem, &schedule, &inner)?;
            let sigma = report.final_report.sigma;
            Ok((v, sigma, report.final_report))
        }
        Err(e) => Err(e),
    }
}

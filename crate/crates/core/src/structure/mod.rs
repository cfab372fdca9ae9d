//! Liouville-type structure analysis of entire solutions.
//!
//! An [`EntireSample`] is a convex solution on a large centered box. The
//! estimators recover `A` and `b` from second quotients and antisymmetric
//! differences; the diagnostics measure decay, scaling, the periodic residual
//! `h = w − v`, doubling, Harnack ratios and the sign contract of the
//! linearized operator.

mod diagnostics;
mod report;

pub use diagnostics::{
    anchor_periodic, concavity_residual, doubling_trace, fit_decay, harnack_ratio, loglog_slope,
    periodic_residual, scaling_errors, scaling_rescale, ConcavityStats, DecayFit, DoublingTrace,
    HBox, HStats, HarnackRatio, ScalingError, ANCHOR_TOL, HARNACK_FLOOR, SIGN_TOL,
};
pub use report::{analyze, quotient_table_csv, AnalysisOptions, StructureReport};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::dirichlet::{solve_dirichlet, BoundaryData, ConvexDomain, DirichletProblem, RhsSource};
use crate::discrete_ma::{convexity_defect_box, ma_operator_periodic, StencilSet, DEFAULT_TOL_CONVEX};
use crate::error::{invalid, MaError, Result};
use crate::lattice::{second_quotient, BoxLattice, PeriodicField, ScalarField, SNAP_TOL};
use crate::periodic::{check_compatibility, SolveOptions, SolveReport, COMPATIBILITY_LIMIT};
use crate::quadratic::QuadraticPart;

/// Smallest accepted half-width of a sample box.
pub const MIN_HALF_WIDTH: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleProvenance {
    Synthesized,
    DirichletReconstructed,
}

/// Convex solution on `[−L, L]ⁿ` together with the right-hand side it solves.
#[derive(Debug, Clone)]
pub struct EntireSample {
    u: ScalarField,
    provenance: SampleProvenance,
    f: PeriodicField,
    half_width: f64,
}

impl EntireSample {
    /// Checks the box shape and certifies convexity along the `W = 1` stencil;
    /// a non-convex field is a gate failure.
    pub fn new(u: ScalarField, provenance: SampleProvenance, f: PeriodicField) -> Result<Self> {
        let lat = u.lattice();
        let n = lat.dim();
        if f.lattice().dim() != n {
            return invalid("sample and right-hand side dimensions differ");
        }
        let l = -lat.lo()[0];
        let tol = SNAP_TOL * lat.spacing();
        for a in 0..n {
            if (lat.lo()[a] + l).abs() > tol || (lat.hi(a) - l).abs() > tol {
                return invalid("sample box must be a centered cube [-L, L]^n");
            }
        }
        if l < MIN_HALF_WIDTH - tol {
            return invalid(format!("sample half-width {l} is below {MIN_HALF_WIDTH}"));
        }
        let defect = convexity_defect_box(&u, &StencilSet::new(n, 1)?)?;
        if defect < -DEFAULT_TOL_CONVEX {
            return Err(MaError::Gate(format!("sample is not convex: second-difference defect {defect:.3e}")));
        }
        Ok(Self { u, provenance, f, half_width: l })
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn f(&self) -> &PeriodicField {
        &self.f
    }

    pub fn provenance(&self) -> SampleProvenance {
        self.provenance
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dim(&self) -> usize {
        self.u.lattice().dim()
    }

    /// `u(x) − ½xᵀAx − b·x` at every active node.
    pub fn affine_residual(&self, qp: &QuadraticPart) -> Result<ScalarField> {
        self.u.map(|x, u| u - qp.quadratic(x) - qp.linear(x))
    }
}

/// Integer directions `k` with `0 < ‖k‖∞ ≤ K`, one representative per `±k` pair
/// (first nonzero component positive), in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDirectionSet {
    k: usize,
    directions: Vec<Vec<i64>>,
}

impl LatticeDirectionSet {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return invalid(format!("dimension must be 1..=3, got {n}"));
        }
        if k == 0 {
            return invalid("truncation K must be at least 1");
        }
        let k_i = k as i64;
        let side = 2 * k + 1;
        let mut directions = Vec::new();
        for flat in 0..side.pow(n as u32) {
            let mut rest = flat;
            let mut d = vec![0i64; n];
            for a in (0..n).rev() {
                d[a] = (rest % side) as i64 - k_i;
                rest /= side;
            }
            if d.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0) {
                directions.push(d);
            }
        }
        Ok(Self { k, directions })
    }

    pub fn truncation(&self) -> usize {
        self.k
    }

    pub fn directions(&self) -> &[Vec<i64>] {
        &self.directions
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

/// Samples `½xᵀAx + b·x + c + v(x)` exactly at the box nodes.
///
/// The attached right-hand side is the discrete operator of `v`, which `v`
/// solves exactly.
pub fn synthesize_entire(qp: &QuadraticPart, v: &PeriodicField, lattice: &BoxLattice) -> Result<EntireSample> {
    let n = lattice.dim();
    if qp.dim() != n || v.lattice().dim() != n {
        return invalid("quadratic part, periodic field and box must share the dimension");
    }
    let mut values = Vec::with_capacity(lattice.len());
    for i in 0..lattice.len() {
        let x = lattice.coord(i);
        let vx = v
            .value_at(&x)
            .ok_or_else(|| MaError::InvalidArgument(format!("box node {x:?} is not a node of the periodic lattice")))?;
        values.push(qp.eval(&x) + vx);
    }
    let u = ScalarField::new(lattice.clone(), values)?;
    let stencil = StencilSet::new(n, 2)?;
    let ev = ma_operator_periodic(v, qp, &stencil)?;
    let f = PeriodicField::new(v.lattice().clone(), ev.values)?;
    EntireSample::new(u, SampleProvenance::Synthesized, f)
}

/// Solves the Dirichlet problem on `[−L, L]ⁿ` with data `g = ½xᵀAx + b·x + c`.
pub fn reconstruct_entire(
    f: &PeriodicField,
    qp: &QuadraticPart,
    half_width: f64,
    h: f64,
    options: &SolveOptions,
) -> Result<(EntireSample, SolveReport)> {
    let n = f.lattice().dim();
    if qp.dim() != n {
        return invalid("quadratic part and right-hand side dimensions differ");
    }
    let defect = check_compatibility(qp, f);
    if defect > COMPATIBILITY_LIMIT {
        return Err(MaError::Infeasible { defect, limit: COMPATIBILITY_LIMIT });
    }
    let l = half_width;
    let domain = match n {
        1 => ConvexDomain::interval(-l, l)?,
        2 => ConvexDomain::rectangle([-l, -l], [l, l])?,
        _ => return invalid("reconstruction supports n = 1 and n = 2"),
    };
    let problem = DirichletProblem::new(domain, h, RhsSource::Periodic(f.clone()), BoundaryData::Quadratic(qp.clone()))?;
    let (u, report) = solve_dirichlet(&problem, options)?;
    let sample = EntireSample::new(u.field, SampleProvenance::DirichletReconstructed, f.clone())?;
    Ok((sample, report))
}

fn unit(n: usize, axis: usize, sign: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[axis] = sign;
    e
}

/// `b_k = (u(e_k) − u(−e_k)) / 2`.
pub fn estimate_b(sample: &EntireSample) -> Result<DVector<f64>> {
    let n = sample.dim();
    let mut b = DVector::zeros(n);
    for k in 0..n {
        let get = |s: f64| {
            sample
                .u
                .value_at(&unit(n, k, s))
                .ok_or_else(|| MaError::InvalidArgument(format!("no sample node at {}e_{k}", if s > 0.0 { "+" } else { "-" })))
        };
        b[k] = (get(1.0)? - get(-1.0)?) / 2.0;
    }
    Ok(b)
}

fn check_inner(sample: &EntireSample, reach: usize, inner: f64) -> Result<()> {
    let margin = (reach as f64).max(2.0);
    if !(inner > 0.0) || inner + margin > sample.half_width + SNAP_TOL {
        return invalid(format!(
            "inner box half-width {inner} must be positive and at least {margin} inside L = {}",
            sample.half_width
        ));
    }
    Ok(())
}

/// Sup and inf of `Δ²ₑu` over the inner box `[−r, r]ⁿ`.
fn quotient_extrema(sample: &EntireSample, e: &[i64], inner: f64) -> Result<(f64, f64)> {
    let q = second_quotient(&sample.u, e, 1.0)?;
    let lat = q.lattice();
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for i in 0..lat.len() {
        if let Some(v) = q.get(i).filter(|_| lat.in_centered_box(i, inner)) {
            sup = sup.max(v);
            inf = inf.min(v);
        }
    }
    if !sup.is_finite() {
        return invalid(format!("no quotient values for direction {e:?} in the inner box"));
    }
    Ok((sup, inf))
}

/// Estimated `A` with its definiteness flag.
#[derive(Debug, Clone, PartialEq)]
pub struct AEstimate {
    pub a: DMatrix<f64>,
    pub spd: bool,
}

/// Recovers `A` from second-quotient suprema over the inner box:
/// `A_ii = sup Δ²_{e_i}u`, and by polarization
/// `A_ij = ½(2 sup Δ²_{e_i+e_j}u − A_ii − A_jj)`.
pub fn estimate_a(sample: &EntireSample, inner: f64) -> Result<AEstimate> {
    check_inner(sample, 1, inner)?;
    let n = sample.dim();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut e = vec![0i64; n];
        e[i] = 1;
        a[(i, i)] = quotient_extrema(sample, &e, inner)?.0;
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut e = vec![0i64; n];
            e[i] = 1;
            e[j] = 1;
            let s = quotient_extrema(sample, &e, inner)?.0;
            let off = 0.5 * (2.0 * s - a[(i, i)] - a[(j, j)]);
            a[(i, j)] = off;
            a[(j, i)] = off;
        }
    }
    let spd = a.clone().cholesky().is_some();
    if !spd {
        log::warn!("estimated A is not positive definite");
    }
    Ok(AEstimate { a, spd })
}

/// One row of the quotient table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientRow {
    pub k: Vec<i64>,
    pub sup: f64,
    pub inf: f64,
    /// `sup − eᵀAe/‖e‖²` with the estimated `A`.
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientProfile {
    pub rows: Vec<QuotientRow>,
    /// `max_e sup Δ²ₑu`.
    pub gamma: f64,
    pub max_gap: f64,
}

impl QuotientProfile {
    /// Whether every gap satisfies the one-sided bound `gap ≤ tol`.
    pub fn one_sided(&self, tol: f64) -> bool {
        self.max_gap <= tol
    }
}

/// Quotient table over `E` on the inner box, with gaps against `a`.
pub fn quotient_profile(
    sample: &EntireSample,
    dirs: &LatticeDirectionSet,
    a: &DMatrix<f64>,
    inner: f64,
) -> Result<QuotientProfile> {
    let n = sample.dim();
    if dirs.directions.first().is_some_and(|d| d.len() != n) || a.nrows() != n {
        return invalid("direction set and A must match the sample dimension");
    }
    check_inner(sample, dirs.k, inner)?;
    let qa = QuadraticPart::new_unchecked(a.clone(), DVector::zeros(n), 0.0)?;
    let rows = dirs
        .directions
        .iter()
        .map(|k| {
            let (sup, inf) = quotient_extrema(sample, k, inner)?;
            let ef: Vec<f64> = k.iter().map(|&c| c as f64).collect();
            Ok(QuotientRow { k: k.clone(), sup, inf, gap: sup - qa.rayleigh(&ef) })
        })
        .collect::<Result<Vec<_>>>()?;
    let gamma = rows.iter().map(|r| r.sup).fold(f64::NEG_INFINITY, f64::max);
    let max_gap = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(QuotientProfile { rows, gamma, max_gap })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusLattice;
    use std::f64::consts::PI;

    fn cosine_v(n: usize, res: usize) -> PeriodicField {
        let lat = TorusLattice::unit(n, res).unwrap();
        PeriodicField::from_fn(lat, |x| -(2.0 * PI * x[0]).cos() / (8.0 * PI * PI)).unwrap()
    }

    fn qp(b: &[f64], c: f64) -> QuadraticPart {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        QuadraticPart::new(a, DVector::from_column_slice(b), c).unwrap()
    }

    #[test]
    fn direction_set_counts() {
        assert_eq!(LatticeDirectionSet::new(1, 3).unwrap().len(), 3);
        assert_eq!(LatticeDirectionSet::new(2, 1).unwrap().len(), 4);
        assert_eq!(LatticeDirectionSet::new(2, 3).unwrap().len(), 24);
        let d = LatticeDirectionSet::new(2, 2).unwrap();
        for k in d.directions() {
            let neg: Vec<i64> = k.iter().map(|c| -c).collect();
            assert!(!d.directions().contains(&neg));
        }
        assert!(LatticeDirectionSet::new(2, 0).is_err());
    }

    #[test]
    fn synthesized_quadratic_is_exact() {
        let lat = BoxLattice::centered(2, 4.0, 0.125).unwrap();
        let v = PeriodicField::zeros(TorusLattice::unit(2, 8).unwrap());
        let q = qp(&[0.0, 0.0], 0.0);
        let s = synthesize_entire(&q, &v, &lat).unwrap();
        for i in 0..lat.len() {
            assert_eq!(s.u().values()[i], q.eval(&lat.coord(i)));
        }
        let shifted = synthesize_entire(&qp(&[0.0, 0.0], 5.0), &v, &lat).unwrap();
        for i in 0..lat.len() {
            assert_eq!(shifted.u().values()[i], q.eval(&lat.coord(i)) + 5.0);
        }
    }

    #[test]
    fn incommensurate_lattices_are_rejected() {
        let lat = BoxLattice::centered(2, 4.0, 0.1).unwrap();
        let v = PeriodicField::zeros(TorusLattice::unit(2, 8).unwrap());
        assert!(synthesize_entire(&qp(&[0.0, 0.0], 0.0), &v, &lat).is_err());
    }

    #[test]
    fn estimators_invert_synthesis() {
        let lat = BoxLattice::centered(2, 6.0, 1.0 / 16.0).unwrap();
        let q = qp(&[3.0, -2.0], 0.7);
        let s = synthesize_entire(&q, &cosine_v(2, 16), &lat).unwrap();
        let b = estimate_b(&s).unwrap();
        assert_eq!(b.as_slice(), &[3.0, -2.0]);
        let est = estimate_a(&s, 3.0).unwrap();
        assert!(est.spd);
        assert!((est.a - &q.a).amax() <= 1e-12);
        let dirs = LatticeDirectionSet::new(2, 3).unwrap();
        let prof = quotient_profile(&s, &dirs, &q.a, 3.0).unwrap();
        for r in &prof.rows {
            assert!(r.gap.abs() <= 1e-12, "{r:?}");
            assert!((r.sup - r.inf).abs() <= 1e-12);
        }
        let qa = QuadraticPart::from_matrix(q.a.clone()).unwrap();
        let expected = dirs
            .directions()
            .iter()
            .map(|k| qa.rayleigh(&[k[0] as f64, k[1] as f64]))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((prof.gamma - expected).abs() <= 1e-12);
    }

    #[test]
    fn inner_box_margin_is_enforced() {
        let lat = BoxLattice::centered(1, 4.0, 0.25).unwrap();
        let v = PeriodicField::zeros(TorusLattice::unit(1, 4).unwrap());
        let s = synthesize_entire(&QuadraticPart::identity(1), &v, &lat).unwrap();
        assert!(estimate_a(&s, 2.0).is_ok());
        assert!(estimate_a(&s, 2.5).is_err());
        let dirs = LatticeDirectionSet::new(1, 3).unwrap();
        assert!(quotient_profile(&s, &dirs, &DMatrix::identity(1, 1), 1.0).is_ok());
        assert!(quotient_profile(&s, &dirs, &DMatrix::identity(1, 1), 1.5).is_err());
    }

    #[test]
    fn nonconvex_sample_fails_the_gate() {
        let lat = BoxLattice::centered(1, 2.0, 0.25).unwrap();
        let u = ScalarField::from_fn(lat, |x| -x[0] * x[0]).unwrap();
        let f = PeriodicField::constant(TorusLattice::unit(1, 4).unwrap(), 1.0).unwrap();
        assert!(matches!(
            EntireSample::new(u, SampleProvenance::Synthesized, f),
            Err(MaError::Gate(_))
        ));
    }

    #[test]
    fn flat_reconstruction_is_exact() {
        let f = PeriodicField::constant(TorusLattice::unit(2, 8).unwrap(), 1.0).unwrap();
        let (s, _) = reconstruct_entire(&f, &QuadraticPart::identity(2), 2.0, 0.125, &SolveOptions::default()).unwrap();
        let lat = s.u().lattice();
        for i in 0..lat.len() {
            let x = lat.coord(i);
            assert!((s.u().values()[i] - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs() < 1e-10);
        }
    }
}

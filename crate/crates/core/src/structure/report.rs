use nalgebra::DVector;
use serde::Serialize;

use super::diagnostics::{
    anchor_periodic, concavity_residual, doubling_trace, fit_decay, harnack_ratio, loglog_slope, periodic_residual,
    scaling_errors, ConcavityStats, DecayFit, DoublingTrace, HBox, HarnackRatio, ScalingError,
};
use super::{estimate_a, estimate_b, quotient_profile, synthesize_entire, EntireSample, LatticeDirectionSet, QuotientRow};
use crate::discrete_ma::{ConvexGridFunction, StencilSet, DEFAULT_TOL_CONVEX};
use crate::error::Result;
use crate::lattice::BoxLattice;
use crate::periodic::{solve_periodic, PeriodicProblem, SolveOptions};
use crate::quadratic::QuadraticPart;

/// Knobs of [`analyze`].
#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    /// Truncation of the direction set.
    pub k: usize,
    /// Half-width of the box where quotients are scanned.
    pub inner: f64,
    pub lambdas: Vec<f64>,
    /// Spacing of the unit-box lattice used for rescaled samples.
    pub target_h: f64,
    pub radii: Vec<f64>,
    /// Nested boxes for `h` statistics; the smallest is also the Harnack inner box.
    pub boxes: Vec<f64>,
    pub doubling_levels: usize,
    pub solve: SolveOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            k: 3,
            inner: 4.0,
            lambdas: vec![2.0, 4.0, 8.0],
            target_h: 0.125,
            radii: vec![1.0, 2.0, 4.0, 8.0],
            boxes: vec![1.0, 2.0, 4.0, 8.0],
            doubling_levels: 3,
            solve: SolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecaySummary {
    pub slope: f64,
    pub c1: f64,
    pub delta: f64,
    pub degenerate: bool,
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
}

impl From<DecayFit> for DecaySummary {
    fn from(d: DecayFit) -> Self {
        Self { slope: d.slope, c1: d.c1, delta: d.delta, degenerate: d.degenerate, radii: d.radii, sups: d.sups }
    }
}

/// Everything [`analyze`] measures, with stable JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureReport {
    pub dim: usize,
    pub half_width: f64,
    pub provenance: super::SampleProvenance,
    /// Row-major.
    pub a_matrix: Vec<f64>,
    pub a_spd: bool,
    pub b_vector: Vec<f64>,
    pub gamma: f64,
    pub max_gap: f64,
    pub quotient_table: Vec<QuotientRow>,
    pub decay: DecaySummary,
    pub scaling_errors: Vec<ScalingError>,
    /// Log-log slope of the scaling errors, absent when some error vanishes.
    pub scaling_slope: Option<f64>,
    pub sigma: f64,
    pub h_stats: Vec<HBox>,
    pub h_constancy: f64,
    pub doubling: DoublingTrace,
    pub harnack: Vec<HarnackRatio>,
    pub concavity: ConcavityStats,
}

/// Full structure analysis of a sample against a fresh periodic solve of its `f`.
pub fn analyze(sample: &EntireSample, options: &AnalysisOptions) -> Result<StructureReport> {
    let n = sample.dim();
    let b = estimate_b(sample)?;
    let a_est = estimate_a(sample, options.inner)?;
    let dirs = LatticeDirectionSet::new(n, options.k)?;
    let profile = quotient_profile(sample, &dirs, &a_est.a, options.inner)?;
    let lin = QuadraticPart::new_unchecked(a_est.a.clone(), b.clone(), 0.0)?;
    let decay = fit_decay(sample, &lin, &options.radii)?;

    let target = BoxLattice::centered(n, 1.0, options.target_h)?;
    let scaling = scaling_errors(sample, &lin, &options.lambdas, &target)?;
    let lambdas: Vec<f64> = scaling.iter().map(|s| s.lambda).collect();
    let errs: Vec<f64> = scaling.iter().map(|s| s.error).collect();
    let scaling_slope = loglog_slope(&lambdas, &errs).ok().map(|(s, _)| s);

    let a_only = QuadraticPart::new(a_est.a.clone(), DVector::zeros(n), 0.0)?;
    let problem = PeriodicProblem::new(a_only, sample.f().clone())?;
    let (v, sigma, _) = solve_periodic(&problem, &options.solve)?;
    let v = anchor_periodic(sample, &v)?;
    let h = periodic_residual(sample, &lin, &v, &options.boxes)?;
    let doubling = doubling_trace(&h.h, options.doubling_levels)?;

    let outer = h.boxes.last().map_or(sample.half_width(), |b| b.r);
    let (_, hmin) = h.h.extrema_in_box(outer).expect("h has nodes in its own boxes");
    let w = h.h.map(|_, x| x - hmin)?;
    let harnack = h
        .boxes
        .iter()
        .filter(|b| b.r < outer)
        .map(|b| harnack_ratio(&w, b.r, outer))
        .collect::<Result<Vec<_>>>()?;

    let stencil = StencilSet::new(n, options.solve.width)?;
    let structural = synthesize_entire(&lin, &v, sample.u().lattice())?;
    let u1 = ConvexGridFunction::certify(sample.u().clone(), &stencil, DEFAULT_TOL_CONVEX)?;
    let u2 = ConvexGridFunction::certify(structural.u().clone(), &stencil, DEFAULT_TOL_CONVEX)?;
    let concavity = concavity_residual(&u1, &u2, options.solve.width)?;

    Ok(StructureReport {
        dim: n,
        half_width: sample.half_width(),
        provenance: sample.provenance(),
        a_matrix: a_est.a.transpose().iter().copied().collect(),
        a_spd: a_est.spd,
        b_vector: b.iter().copied().collect(),
        gamma: profile.gamma,
        max_gap: profile.max_gap,
        quotient_table: profile.rows,
        decay: decay.into(),
        scaling_errors: scaling,
        scaling_slope,
        sigma,
        h_constancy: h.constancy,
        h_stats: h.boxes,
        doubling,
        harnack,
        concavity,
    })
}

/// `k1,…,kn,sup,inf,gap` rows.
pub fn quotient_table_csv(rows: &[QuotientRow]) -> String {
    let n = rows.first().map_or(0, |r| r.k.len());
    let mut out: Vec<String> = (1..=n).map(|i| format!("k{i}")).collect();
    out.extend(["sup", "inf", "gap"].map(String::from));
    let mut text = out.join(",") + "\n";
    for r in rows {
        let mut cols: Vec<String> = r.k.iter().map(|k| k.to_string()).collect();
        cols.extend([r.sup, r.inf, r.gap].iter().map(|v| format!("{v:e}")));
        text += &(cols.join(",") + "\n");
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{PeriodicField, TorusLattice};
    use nalgebra::DMatrix;
    use std::f64::consts::PI;

    #[test]
    fn synthesized_sample_report() {
        let lat = TorusLattice::unit(2, 16).unwrap();
        let f = PeriodicField::from_fn(lat, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let a = QuadraticPart::identity(2);
        let (v, _, _) = solve_periodic(&PeriodicProblem::new(a, f).unwrap(), &SolveOptions::default()).unwrap();
        let qp = QuadraticPart::new(DMatrix::identity(2, 2), DVector::from_vec(vec![1.0, -0.5]), 0.25).unwrap();
        let sample = synthesize_entire(&qp, &v, &BoxLattice::centered(2, 8.0, 0.125).unwrap()).unwrap();
        let rep = analyze(&sample, &AnalysisOptions::default()).unwrap();
        assert!(rep.max_gap.abs() <= 1e-12);
        assert!((rep.b_vector[0] - 1.0).abs() <= 1e-12 && (rep.b_vector[1] + 0.5).abs() <= 1e-12);
        assert!(rep.h_constancy <= 1e-8, "{}", rep.h_constancy);
        assert!(rep.doubling.verdict);
        assert!(rep.concavity.violation_fraction == 0.0, "{:?}", rep.concavity);
        let csv = quotient_table_csv(&rep.quotient_table);
        assert!(csv.starts_with("k1,k2,sup,inf,gap\n"));
        assert_eq!(csv.lines().count(), 25);
        let json = serde_json::to_value(&rep).unwrap();
        for key in ["a_matrix", "b_vector", "gamma", "quotient_table", "decay", "scaling_errors", "h_stats", "doubling", "harnack", "concavity"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert!(json["decay"].get("slope").is_some() && json["decay"].get("c1").is_some());
    }
}

use nalgebra::DMatrix;
use serde::Serialize;

use super::EntireSample;
use crate::discrete_ma::{linearize_box, ma_operator_box, ConvexGridFunction, StencilSet};
use crate::error::{invalid, MaError, Result};
use crate::lattice::{resample, AffineMap, BoxLattice, PeriodicField, ScalarField, SNAP_TOL};
use crate::quadratic::QuadraticPart;

/// Largest accepted `|h(0)|` for an anchored periodic part.
pub const ANCHOR_TOL: f64 = 1e-10;
/// Floor applied to the inner infimum of a Harnack ratio.
pub const HARNACK_FLOOR: f64 = 1e-14;
/// Slack in the sign contract of the linearized operator.
pub const SIGN_TOL: f64 = 1e-8;

/// Least-squares slope and intercept of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return invalid("log-log fit needs at least two matching points");
    }
    if xs.iter().chain(ys).any(|v| !(v.is_finite() && *v > 0.0)) {
        return invalid("log-log fit needs positive finite data");
    }
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let m = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / m;
    let my = ly.iter().sum::<f64>() / m;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return invalid("log-log fit needs distinct abscissae");
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fit of `sup_{‖x‖∞ = r} |u − Q − b·x| ≈ C₁ r^s`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    pub slope: f64,
    pub c1: f64,
    /// `2 − slope` clipped to `[0, 2]`.
    pub delta: f64,
    /// The residual is at roundoff level and no fit was made.
    pub degenerate: bool,
}

pub fn fit_decay(sample: &EntireSample, qp: &QuadraticPart, radii: &[f64]) -> Result<DecayFit> {
    if radii.len() < 3 {
        return invalid(format!("decay fit needs at least 3 radii, got {}", radii.len()));
    }
    let u = sample.u();
    let lat = u.lattice();
    let h = lat.spacing();
    let mut sups = Vec::with_capacity(radii.len());
    let mut scale = 1.0f64;
    for &r in radii {
        if !(r > 0.0) || r > sample.half_width() + SNAP_TOL * h {
            return invalid(format!("radius {r} is outside (0, {}]", sample.half_width()));
        }
        let mut sup = f64::NEG_INFINITY;
        for i in 0..lat.len() {
            let x = lat.coord(i);
            let norm = x.iter().fold(0.0f64, |m, c| m.max(c.abs()));
            if (norm - r).abs() > SNAP_TOL * h.max(r) {
                continue;
            }
            if let Some(v) = u.get(i) {
                let q = qp.quadratic(&x) + qp.linear(&x);
                scale = scale.max(q.abs());
                sup = sup.max((v - q).abs());
            }
        }
        if !sup.is_finite() {
            return invalid(format!("no sample nodes on the shell of radius {r}"));
        }
        sups.push(sup);
    }
    let floor = 1e-12 * scale;
    if sups.iter().all(|s| *s <= floor) {
        return Ok(DecayFit { radii: radii.to_vec(), sups, slope: 0.0, c1: 0.0, delta: 2.0, degenerate: true });
    }
    let clipped: Vec<f64> = sups.iter().map(|s| s.max(floor)).collect();
    let (slope, intercept) = loglog_slope(radii, &clipped)?;
    Ok(DecayFit {
        radii: radii.to_vec(),
        sups,
        slope,
        c1: intercept.exp(),
        delta: (2.0 - slope).clamp(0.0, 2.0),
        degenerate: false,
    })
}

/// `u^λ(x) = u(λx)/λ²` sampled on `target`; exact at nodes where `λx` is a sample node.
pub fn scaling_rescale(sample: &EntireSample, lambda: f64, target: &BoxLattice) -> Result<ScalarField> {
    let n = sample.dim();
    if !(lambda.is_finite() && lambda >= 1.0) {
        return invalid(format!("scaling factor must be at least 1, got {lambda}"));
    }
    if target.dim() != n {
        return invalid("target lattice dimension differs from the sample");
    }
    let reach = (0..n).fold(0.0f64, |m, a| m.max(target.lo()[a].abs()).max(target.hi(a).abs()));
    if lambda * reach > sample.half_width() * (1.0 + SNAP_TOL) {
        return invalid(format!(
            "scaling factor {lambda} maps the target outside the sample box of half-width {}",
            sample.half_width()
        ));
    }
    let map = AffineMap::new(DMatrix::identity(n, n) / lambda, nalgebra::DVector::zeros(n))?;
    let scaled = resample(sample.u(), &map, target)?;
    scaled.map(|_, v| v / (lambda * lambda))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingError {
    pub lambda: f64,
    /// `sup_{|x| ≤ 1} |u^λ − Q − b·x/λ|` over target nodes.
    pub error: f64,
}

pub fn scaling_errors(
    sample: &EntireSample,
    qp: &QuadraticPart,
    lambdas: &[f64],
    target: &BoxLattice,
) -> Result<Vec<ScalingError>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let ul = scaling_rescale(sample, lambda, target)?;
            let lat = ul.lattice();
            let mut err = 0.0f64;
            for i in 0..lat.len() {
                let x = lat.coord(i);
                if x.iter().map(|c| c * c).sum::<f64>() > 1.0 + SNAP_TOL {
                    continue;
                }
                if let Some(v) = ul.get(i) {
                    err = err.max((v - qp.quadratic(&x) - qp.linear(&x) / lambda).abs());
                }
            }
            Ok(ScalingError { lambda, error: err })
        })
        .collect()
}

/// Shifts `v` so that `v(0) = w(0) = u(0)`.
pub fn anchor_periodic(sample: &EntireSample, v: &PeriodicField) -> Result<PeriodicField> {
    let origin = vec![0.0; sample.dim()];
    let w0 = sample
        .u()
        .value_at(&origin)
        .ok_or_else(|| MaError::InvalidArgument("sample has no node at the origin".into()))?;
    let v0 = v.value_at(&origin).expect("origin is always a torus node");
    Ok(v.shifted_by(w0 - v0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HBox {
    pub r: f64,
    pub sup: f64,
    pub inf: f64,
    pub spread: f64,
}

/// Statistics of `h = w − v` on nested boxes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HStats {
    pub boxes: Vec<HBox>,
    /// `sup − inf` on the largest box.
    pub constancy: f64,
    #[serde(skip)]
    pub h: ScalarField,
}

/// `h = u − ½xᵀAx − b·x − v` for an anchored `v`.
pub fn periodic_residual(
    sample: &EntireSample,
    qp: &QuadraticPart,
    v: &PeriodicField,
    boxes: &[f64],
) -> Result<HStats> {
    if boxes.is_empty() {
        return invalid("at least one box is required");
    }
    let w = sample.affine_residual(qp)?;
    let lat = w.lattice();
    let mut values = vec![f64::NAN; lat.len()];
    for (i, out) in values.iter_mut().enumerate() {
        if let Some(wi) = w.get(i) {
            let x = lat.coord(i);
            let vx = v
                .value_at(&x)
                .ok_or_else(|| MaError::InvalidArgument(format!("sample node {x:?} is not a node of v's lattice")))?;
            *out = wi - vx;
        }
    }
    let h = ScalarField::from_partial(lat.clone(), values)?;
    let h0 = h
        .value_at(&vec![0.0; lat.dim()])
        .ok_or_else(|| MaError::InvalidArgument("sample has no node at the origin".into()))?;
    if h0.abs() > ANCHOR_TOL {
        return invalid(format!("periodic part is not anchored: h(0) = {h0:.3e}"));
    }
    let mut sorted = boxes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let stats = sorted
        .iter()
        .map(|&r| {
            if r > sample.half_width() + SNAP_TOL * lat.spacing() {
                return invalid(format!("box {r} exceeds the sample half-width {}", sample.half_width()));
            }
            let (sup, inf) = h.extrema_in_box(r).ok_or_else(|| MaError::InvalidArgument(format!("box {r} has no nodes")))?;
            Ok(HBox { r, sup, inf, spread: sup - inf })
        })
        .collect::<Result<Vec<_>>>()?;
    let constancy = stats.last().map_or(0.0, |b| b.spread);
    Ok(HStats { boxes: stats, constancy, h })
}

/// `M_{2^i} = sup_{[−2^i, 2^i]ⁿ} h` and the doubling verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoublingTrace {
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    /// `max(0, M₂ − 4M₁)`.
    pub c: f64,
    pub verdict: bool,
    pub requested_levels: usize,
    pub levels: usize,
}

/// Evaluates levels `i = 0..=m` (radius `2^i`) that fit inside the field.
pub fn doubling_trace(h: &ScalarField, m: usize) -> Result<DoublingTrace> {
    let lat = h.lattice();
    let l = (0..lat.dim()).fold(f64::INFINITY, |acc, a| acc.min(-lat.lo()[a]).min(lat.hi(a)));
    let mut radii = Vec::new();
    let mut sups = Vec::new();
    for i in 0..=m {
        let r = (1u64 << i) as f64;
        if r > l + SNAP_TOL * lat.spacing() {
            break;
        }
        let (sup, _) = h.extrema_in_box(r).ok_or_else(|| MaError::InvalidArgument(format!("box {r} has no nodes")))?;
        radii.push(r);
        sups.push(sup);
    }
    if sups.len() < 2 {
        return invalid("field is too small for two doubling levels");
    }
    let c = (sups[1] - 4.0 * sups[0]).max(0.0);
    let verdict = sups.windows(2).all(|w| {
        let rhs = 4.0 * w[0] + c;
        w[1] <= rhs + 1e-12 * rhs.abs().max(w[1].abs()).max(1.0)
    });
    Ok(DoublingTrace { levels: radii.len() - 1, radii, sups, c, verdict, requested_levels: m })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackRatio {
    pub inner: f64,
    pub sup: f64,
    pub inf: f64,
    pub ratio: f64,
    /// The inner infimum fell below the floor.
    pub capped: bool,
}

/// `sup_inner w / max(inf_inner w, floor)` for `w ≥ 0` on the outer box.
pub fn harnack_ratio(w: &ScalarField, inner: f64, outer: f64) -> Result<HarnackRatio> {
    if !(inner > 0.0 && inner <= outer) {
        return invalid(format!("need 0 < inner <= outer, got {inner} and {outer}"));
    }
    let (_, outer_inf) = w.extrema_in_box(outer).ok_or_else(|| MaError::InvalidArgument("outer box has no nodes".into()))?;
    if outer_inf < 0.0 {
        return invalid(format!("Harnack ratio needs w >= 0, found {outer_inf:.3e}"));
    }
    let (sup, inf) = w.extrema_in_box(inner).ok_or_else(|| MaError::InvalidArgument("inner box has no nodes".into()))?;
    let capped = inf < HARNACK_FLOOR;
    Ok(HarnackRatio { inner, sup, inf, ratio: sup / inf.max(HARNACK_FLOOR), capped })
}

/// Sign-contract statistics for a pair of solutions of the same equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityStats {
    pub nodes: usize,
    /// `min L₁[u₂ − u₁]`, expected `≥ 0`.
    pub l1_min: f64,
    /// `max L₂[u₂ − u₁]`, expected `≤ 0`.
    pub l2_max: f64,
    pub violations: usize,
    pub violation_fraction: f64,
}

/// `L_i[u₂ − u₁]` where `L_i` linearizes `MA_h^{1/n}` at `u_i`.
pub fn concavity_residual(u1: &ConvexGridFunction, u2: &ConvexGridFunction, width: usize) -> Result<ConcavityStats> {
    let (f1, f2) = (u1.field(), u2.field());
    if f1.lattice() != f2.lattice() {
        return invalid("both fields must live on the same lattice");
    }
    if !(u1.certified && u2.certified) {
        return Err(MaError::Gate("concavity residual needs certified convex fields".into()));
    }
    let n = f1.lattice().dim();
    let stencil = StencilSet::new(n, width)?;
    let zero = QuadraticPart::zero(n);
    let du: Vec<f64> = f1.values().iter().zip(f2.values()).map(|(a, b)| b - a).collect();
    let pass = |u: &ScalarField| -> Result<Vec<(usize, f64)>> {
        let ma = ma_operator_box(u, &zero, &stencil)?;
        let lin = linearize_box(u, &zero, &stencil)?;
        Ok(lin
            .rows
            .iter()
            .zip(lin.apply(&du))
            .filter_map(|(row, d)| {
                let m = ma.values[row.node];
                (m > 0.0).then(|| (row.node, m.powf(1.0 / n as f64 - 1.0) / n as f64 * d))
            })
            .collect())
    };
    let l1 = pass(f1)?;
    let l2: std::collections::HashMap<usize, f64> = pass(f2)?.into_iter().collect();
    let mut stats = ConcavityStats {
        nodes: 0,
        l1_min: f64::INFINITY,
        l2_max: f64::NEG_INFINITY,
        violations: 0,
        violation_fraction: 0.0,
    };
    for (node, a) in l1 {
        let Some(&b) = l2.get(&node) else { continue };
        stats.nodes += 1;
        stats.l1_min = stats.l1_min.min(a);
        stats.l2_max = stats.l2_max.max(b);
        if a < -SIGN_TOL || b > SIGN_TOL {
            stats.violations += 1;
        }
    }
    if stats.nodes > 0 {
        stats.violation_fraction = stats.violations as f64 / stats.nodes as f64;
    }
    Ok(stats)
}

use super::stencil::StencilSet;
use crate::error::{invalid, Result};
use crate::lattice::{PeriodicField, ScalarField};
use crate::quadratic::QuadraticPart;

/// Default tolerance below zero still accepted as convex.
pub const DEFAULT_TOL_CONVEX: f64 = 1e-9;

fn phys_len2(dir: &[i64], spacings: &[f64]) -> f64 {
    dir.iter().zip(spacings).map(|(d, h)| (*d as f64 * h).powi(2)).sum()
}

/// Minimum directional second difference over nodes whose stencil arms stay on
/// active nodes; `+∞` when no such node exists.
pub fn convexity_defect_box(u: &ScalarField, stencil: &StencilSet) -> Result<f64> {
    let lat = u.lattice();
    let n = lat.dim();
    if stencil.dim() != n {
        return invalid("stencil dimension does not match the field");
    }
    let spacings = vec![lat.spacing(); n];
    let mut defect = f64::INFINITY;
    for p in 0..lat.len() {
        let Some(u0) = u.get(p) else { continue };
        for d in stencil.directions() {
            let minus: Vec<i64> = d[..n].iter().map(|c| -c).collect();
            let fwd = lat.shifted(p, &d[..n]).and_then(|j| u.get(j));
            let bwd = lat.shifted(p, &minus).and_then(|j| u.get(j));
            if let (Some(a), Some(b)) = (fwd, bwd) {
                defect = defect.min((a + b - 2.0 * u0) / phys_len2(&d[..n], &spacings));
            }
        }
    }
    Ok(defect)
}

/// Convexity defect of `½xᵀAx + v` for periodic `v`: min over nodes and
/// directions of `eᵀAe + δ²v`.
pub fn convexity_defect_periodic(v: &PeriodicField, a: &QuadraticPart, stencil: &StencilSet) -> Result<f64> {
    let lat = v.lattice();
    let n = lat.dim();
    if stencil.dim() != n || a.dim() != n {
        return invalid("dimension mismatch between field, A and stencil");
    }
    let spacings = lat.spacings();
    let vals = v.values();
    let mut defect = f64::INFINITY;
    for d in stencil.directions() {
        let disp: Vec<f64> = (0..n).map(|i| d[i] as f64 * spacings[i]).collect();
        let l2 = phys_len2(&d[..n], &spacings);
        let quad = a.rayleigh(&disp);
        let minus: Vec<i64> = d[..n].iter().map(|c| -c).collect();
        for p in 0..lat.len() {
            let s = vals[lat.shifted(p, &d[..n])] + vals[lat.shifted(p, &minus)] - 2.0 * vals[p];
            defect = defect.min(quad + s / l2);
        }
    }
    Ok(defect)
}

/// A box field together with its convexity certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexGridFunction {
    pub field: ScalarField,
    pub defect: f64,
    pub certified: bool,
}

impl ConvexGridFunction {
    pub fn certify(field: ScalarField, stencil: &StencilSet, tol_convex: f64) -> Result<Self> {
        let defect = convexity_defect_box(&field, stencil)?;
        Ok(Self { field, defect, certified: defect >= -tol_convex })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoxLattice, TorusLattice};

    #[test]
    fn paraboloids() {
        let lat = BoxLattice::centered(2, 1.0, 0.125).unwrap();
        let s = StencilSet::new(2, 2).unwrap();
        let up = ScalarField::from_fn(lat.clone(), |x| 0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!((convexity_defect_box(&up, &s).unwrap() - 1.0).abs() < 1e-12);
        let down = ScalarField::from_fn(lat, |x| -0.5 * (x[0] * x[0] + x[1] * x[1])).unwrap();
        assert!((convexity_defect_box(&down, &s).unwrap() + 1.0).abs() < 1e-12);
        assert!(ConvexGridFunction::certify(up, &s, DEFAULT_TOL_CONVEX).unwrap().certified);
        assert!(!ConvexGridFunction::certify(down, &s, DEFAULT_TOL_CONVEX).unwrap().certified);
    }

    #[test]
    fn periodic_flat() {
        let v = PeriodicField::zeros(TorusLattice::unit(2, 8).unwrap());
        let a = QuadraticPart::diagonal(&[2.0, 0.5]).unwrap();
        let s = StencilSet::new(2, 1).unwrap();
        assert!((convexity_defect_periodic(&v, &a, &s).unwrap() - 0.5).abs() < 1e-15);
    }
}

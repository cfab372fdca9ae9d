use nalgebra::{DMatrix, DVector};

use super::{BoxLattice, ScalarField, SNAP_TOL};
use crate::error::{invalid, Result};

/// Affine map `T(y) = a y + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl AffineMap {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() || a.nrows() != b.len() {
            return invalid("affine map dimensions do not match");
        }
        if a.clone().try_inverse().is_none() {
            return invalid("affine map matrix is singular");
        }
        Ok(Self { a, b })
    }

    pub fn identity(n: usize) -> Self {
        Self { a: DMatrix::identity(n, n), b: DVector::zeros(n) }
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self { a: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]), b: DVector::zeros(2) }
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let v = &self.a * DVector::from_column_slice(y) + &self.b;
        v.iter().copied().collect()
    }

    pub fn inverse(&self) -> AffineMap {
        let inv = self.a.clone().try_inverse().expect("checked at construction");
        let b = -(&inv * &self.b);
        AffineMap { a: inv, b }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &AffineMap) -> AffineMap {
        AffineMap { a: &self.a * &other.a, b: &self.a * &other.b + &self.b }
    }
}

/// Multilinear interpolation of `u` at an arbitrary point; `None` outside the
/// lattice hull or when a contributing node is masked.
pub(crate) fn interpolate(u: &ScalarField, x: &[f64]) -> Option<f64> {
    let lat = u.lattice();
    let n = lat.dim();
    if !lat.contains_point(x) {
        return None;
    }
    let h = lat.spacing();
    let mut base = [0i64; 3];
    let mut frac = [0f64; 3];
    for a in 0..n {
        let t = ((x[a] - lat.lo()[a]) / h).clamp(0.0, (lat.dims()[a] - 1) as f64);
        let r = t.round();
        let (k, s) = if (t - r).abs() <= SNAP_TOL * t.max(1.0) { (r, 0.0) } else { (t.floor(), t - t.floor()) };
        let mut k = k as i64;
        let mut s = s;
        if k == lat.dims()[a] as i64 - 1 && s > 0.0 {
            k -= 1;
            s = 1.0;
        }
        base[a] = k;
        frac[a] = s;
    }
    let mut acc = 0.0;
    for corner in 0..(1usize << n) {
        let mut w = 1.0;
        let mut idx = base;
        for a in 0..n {
            if corner >> a & 1 == 1 {
                w *= frac[a];
                idx[a] += 1;
            } else {
                w *= 1.0 - frac[a];
            }
        }
        if w == 0.0 {
            continue;
        }
        acc += w * u.get(lat.index(&idx))?;
    }
    Some(acc)
}

/// Output node `x` receives `u(T⁻¹(x))`, multilinearly interpolated on `u`'s lattice.
/// Preimages outside the source hull become masked nodes.
pub fn resample(u: &ScalarField, map: &AffineMap, target: &BoxLattice) -> Result<ScalarField> {
    let n = u.lattice().dim();
    if map.dim() != n || target.dim() != n {
        return invalid("resample: map, source and target dimensions differ");
    }
    let inv = map.inverse();
    let values = (0..target.len())
        .map(|i| interpolate(u, &inv.apply(&target.coord(i))).unwrap_or(f64::NAN))
        .collect();
    ScalarField::from_partial(target.clone(), values)
}

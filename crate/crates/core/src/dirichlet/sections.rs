//! Sections `{u < M}`, their John normalization and the rescaled function `u_M`.

use nalgebra::{DMatrix, DVector};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use super::domain::{convex_hull, ConvexDomain};
use crate::error::{invalid, MaError, Result};
use crate::lattice::{resample, AffineMap, BoxLattice, ScalarField};

/// A convexified sublevel set and the Hausdorff distance between the raw
/// level curve and the boundary of its hull.
#[derive(Debug, Clone, PartialEq)]
pub struct SublevelSet {
    pub domain: ConvexDomain,
    pub hull_defect: f64,
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Extracts `{u < M}` by linear interpolation along lattice edges, then hulls it.
pub fn sublevel_set(u: &ScalarField, m: f64) -> Result<SublevelSet> {
    let lat = u.lattice();
    let n = lat.dim();
    let min = (0..lat.len()).filter_map(|i| u.get(i)).fold(f64::INFINITY, f64::min);
    if !(min < m) {
        return invalid(format!("level {m} is not above min u = {min}"));
    }
    for i in 0..lat.len() {
        if let Some(v) = u.get(i) {
            let on_rim = lat.is_edge(i) || {
                let mut any = false;
                for a in 0..n {
                    for s in [-1i64, 1] {
                        let mut e = [0i64; 3];
                        e[a] = s;
                        any |= lat.shifted(i, &e[..n]).is_none_or(|j| !u.is_active(j));
                    }
                }
                any
            };
            if on_rim && v < m {
                return invalid(format!("level {m} reaches the edge of the sampled region"));
            }
        }
    }
    let crossing = |i: usize, j: usize| -> Option<Vec<f64>> {
        let (a, b) = (u.get(i)?, u.get(j)?);
        if (a < m) == (b < m) {
            return None;
        }
        let t = (m - a) / (b - a);
        let (x, y) = (lat.coord(i), lat.coord(j));
        Some(x.iter().zip(&y).map(|(p, q)| p + t * (q - p)).collect())
    };
    match n {
        1 => {
            let pts: Vec<f64> = (0..lat.len() - 1).filter_map(|i| crossing(i, i + 1)).map(|p| p[0]).collect();
            let lo = pts.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = pts.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if pts.len() < 2 {
                return invalid("sublevel set is empty at this resolution");
            }
            Ok(SublevelSet { domain: ConvexDomain::interval(lo, hi)?, hull_defect: 0.0 })
        }
        2 => {
            // marching squares: one segment per cell with two crossings
            let mut segments: Vec<([f64; 2], [f64; 2])> = Vec::new();
            let mut points: Vec<[f64; 2]> = Vec::new();
            let dims = lat.dims();
            for i in 0..dims[0] - 1 {
                for j in 0..dims[1] - 1 {
                    let c = [
                        lat.index(&[i as i64, j as i64, 0]),
                        lat.index(&[i as i64 + 1, j as i64, 0]),
                        lat.index(&[i as i64 + 1, j as i64 + 1, 0]),
                        lat.index(&[i as i64, j as i64 + 1, 0]),
                    ];
                    let cut: Vec<[f64; 2]> =
                        (0..4).filter_map(|k| crossing(c[k], c[(k + 1) % 4])).map(|p| [p[0], p[1]]).collect();
                    points.extend(&cut);
                    for pair in cut.chunks(2) {
                        if pair.len() == 2 {
                            segments.push((pair[0], pair[1]));
                        }
                    }
                }
            }
            let hull = convex_hull(&points);
            if hull.len() < 3 {
                return invalid("sublevel set is empty at this resolution");
            }
            let k = hull.len();
            let to_hull = |p: [f64; 2]| (0..k).map(|i| seg_dist(p, hull[i], hull[(i + 1) % k])).fold(f64::INFINITY, f64::min);
            let to_raw = |p: [f64; 2]| segments.iter().map(|(a, b)| seg_dist(p, *a, *b)).fold(f64::INFINITY, f64::min);
            let mut defect = points.iter().map(|p| to_hull(*p)).fold(0.0, f64::max);
            for i in 0..k {
                let (a, b) = (hull[i], hull[(i + 1) % k]);
                for s in 1..8 {
                    let t = s as f64 / 8.0;
                    defect = defect.max(to_raw([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]));
                }
            }
            Ok(SublevelSet { domain: ConvexDomain::polygon(&hull)?, hull_defect: defect })
        }
        _ => invalid("sublevel sets are supported for n in 1..=2"),
    }
}

/// Affine normalization `x ↦ a x + b` with `det a = 1` and
/// `B_R ⊂ a Ω + b ⊂ B_{nR}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JohnMap {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub r: f64,
    /// Largest centered ball inside the normalized domain.
    pub inner_radius: f64,
    /// Smallest centered ball containing the normalized domain.
    pub outer_radius: f64,
}

impl Serialize for JohnMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.a.nrows();
        let a: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| self.a[(i, j)]).collect();
        let mut st = s.serialize_struct("JohnMap", 3)?;
        st.serialize_field("a", &a)?;
        st.serialize_field("b", &self.b.iter().copied().collect::<Vec<_>>())?;
        st.serialize_field("R", &self.r)?;
        st.end()
    }
}

impl JohnMap {
    pub fn affine(&self) -> AffineMap {
        AffineMap { a: self.a.clone(), b: self.b.clone() }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.affine().apply(x)
    }
}

/// Minimum-volume enclosing ellipsoid `(x − c)ᵀE(x − c) ≤ 1` of the points
/// (Khachiyan's barycentric ascent).
pub fn mvee(points: &[Vec<f64>], tol: f64, max_iter: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let d = points[0].len();
    let m = points.len();
    let q = DMatrix::from_fn(d + 1, m, |i, j| if i < d { points[j][i] } else { 1.0 });
    let mut w = DVector::from_element(m, 1.0 / m as f64);
    for _ in 0..max_iter {
        let x = &q * DMatrix::from_diagonal(&w) * q.transpose();
        let xinv = x
            .clone()
            .cholesky()
            .ok_or_else(|| MaError::InvalidArgument("degenerate (flat) point set".into()))?
            .inverse();
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..m {
            let col = q.column(j);
            let v = (col.transpose() * &xinv * col)[(0, 0)];
            if v > best.1 {
                best = (j, v);
            }
        }
        let (j, mj) = best;
        let step = (mj - d as f64 - 1.0) / ((d as f64 + 1.0) * (mj - 1.0));
        let mut next = &w * (1.0 - step);
        next[j] += step;
        let change = (&next - &w).norm();
        w = next;
        if change < tol {
            break;
        }
    }
    let p = DMatrix::from_fn(d, m, |i, j| points[j][i]);
    let c = &p * &w;
    let cov = &p * DMatrix::from_diagonal(&w) * p.transpose() - &c * c.transpose();
    let e = cov
        .try_inverse()
        .ok_or_else(|| MaError::InvalidArgument("degenerate (flat) point set".into()))?
        / d as f64;
    Ok((e, c))
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Relative slack allowed in the inner inclusion (the ellipsoid is only
/// computed to the iteration tolerance).
pub const JOHN_SLACK: f64 = 1e-6;

/// John normalization of a convex domain.
pub fn john_normalize(domain: &ConvexDomain) -> Result<JohnMap> {
    let n = domain.dim();
    if domain.volume() <= 0.0 {
        return invalid("domain has empty interior");
    }
    let verts = domain.vertices();
    let (e, c) = if n == 1 {
        let (lo, hi) = (verts[0][0], verts[1][0]);
        let half = 0.5 * (hi - lo);
        (DMatrix::from_element(1, 1, 1.0 / (half * half)), DVector::from_element(1, 0.5 * (lo + hi)))
    } else {
        mvee(&verts, 1e-8, 100_000)?
    };
    // make every vertex lie inside the ellipsoid exactly
    let reach = verts
        .iter()
        .map(|v| {
            let y = DVector::from_column_slice(v) - &c;
            (y.transpose() * &e * &y)[(0, 0)]
        })
        .fold(0.0f64, f64::max);
    let e = e / reach.max(f64::MIN_POSITIVE);
    let s = sym_sqrt(&e);
    let det_s = s.determinant();
    if !(det_s > 0.0) {
        return invalid("degenerate (flat) domain");
    }
    let a = &s / det_s.powf(1.0 / n as f64);
    let b = -(&a * &c);
    let image = domain.transformed(&a, b.as_slice())?;
    let outer_radius = image
        .vertices()
        .iter()
        .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let inner_radius = image.inner_distance(&vec![0.0; n]);
    let r = outer_radius / n as f64;
    if inner_radius < r * (1.0 - JOHN_SLACK) {
        return Err(MaError::Domain(format!(
            "John sandwich failed: inner radius {inner_radius:.6e} below R = {r:.6e}"
        )));
    }
    Ok(JohnMap { a, b, r, inner_radius, outer_radius })
}

/// `u_M(x) = u(a⁻¹(R x − b)) / R²` sampled on `target`.
pub fn section_rescale(u: &ScalarField, map: &JohnMap, r: f64, target: &BoxLattice) -> Result<ScalarField> {
    if !(r > 0.0) {
        return invalid("R must be positive");
    }
    let scaled = AffineMap::new(&map.a / r, &map.b / r)?;
    let out = resample(u, &scaled, target)?;
    out.map(|_, v| v / (r * r))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paraboloid(a: [f64; 2], h: f64, half: f64) -> ScalarField {
        let lat = BoxLattice::centered(2, half, h).unwrap();
        ScalarField::from_fn(lat, |x| 0.5 * (a[0] * x[0] * x[0] + a[1] * x[1] * x[1])).unwrap()
    }

    #[test]
    fn disk_sublevel() {
        let h = 1.0 / 32.0;
        let u = paraboloid([1.0, 1.0], h, 1.5);
        let s = sublevel_set(&u, 0.5).unwrap();
        for v in s.domain.vertices() {
            let r = (v[0] * v[0] + v[1] * v[1]).sqrt();
            assert!((r - 1.0).abs() < h, "{r}");
        }
        assert!(s.hull_defect < h);
        assert!(sublevel_set(&u, -0.1).is_err());
    }

    #[test]
    fn ellipse_sublevel() {
        let h = 1.0 / 32.0;
        let u = paraboloid([4.0, 1.0], h, 1.5);
        let s = sublevel_set(&u, 0.5).unwrap();
        let (lo, hi) = s.domain.bounds();
        assert!((hi[0] - 0.5).abs() < h && (lo[0] + 0.5).abs() < h);
        assert!((hi[1] - 1.0).abs() < h && (lo[1] + 1.0).abs() < h);
    }

    #[test]
    fn john_disk_and_ellipse() {
        let disk = ConvexDomain::regular_polygon([0.0, 0.0], 1.0, 64, 0.0).unwrap();
        let j = john_normalize(&disk).unwrap();
        assert!((j.a.clone() - DMatrix::identity(2, 2)).amax() < 1e-6);
        assert!((j.r * 2.0 - 1.0).abs() < 1e-6);
        let verts: Vec<[f64; 2]> = (0..64)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
                [2.0 * t.cos(), t.sin()]
            })
            .collect();
        let j = john_normalize(&ConvexDomain::polygon(&verts).unwrap()).unwrap();
        assert!((j.a.determinant() - 1.0).abs() < 1e-10);
        let s = 2f64.sqrt();
        assert!((j.a[(0, 0)] - 1.0 / s).abs() < 1e-6 && (j.a[(1, 1)] - s).abs() < 1e-6);
    }

    #[test]
    fn john_triangle_sandwich() {
        let tri = ConvexDomain::polygon(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]).unwrap();
        let j = john_normalize(&tri).unwrap();
        assert!((j.a.determinant() - 1.0).abs() < 1e-10);
        assert!(j.inner_radius >= j.r * (1.0 - JOHN_SLACK));
        assert!(j.outer_radius <= 2.0 * j.r * (1.0 + 1e-12));
    }

    #[test]
    fn rescale_identities() {
        let h = 1.0 / 16.0;
        let u = paraboloid([1.0, 1.0], h, 2.0);
        let id = JohnMap {
            a: DMatrix::identity(2, 2),
            b: DVector::zeros(2),
            r: 1.0,
            inner_radius: 1.0,
            outer_radius: 1.0,
        };
        let target = BoxLattice::centered(2, 1.0, h).unwrap();
        let same = section_rescale(&u, &id, 1.0, &target).unwrap();
        for i in 0..target.len() {
            let x = target.coord(i);
            assert!((same.values()[i] - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs() < 1e-14);
        }
        let r = 2f64.sqrt();
        let scaled = section_rescale(&u, &id, r, &BoxLattice::centered(2, 1.0, 0.125).unwrap()).unwrap();
        for i in 0..scaled.lattice().len() {
            let x = scaled.lattice().coord(i);
            assert!((scaled.values()[i] - 0.5 * (x[0] * x[0] + x[1] * x[1])).abs() < h * h);
        }
    }
}

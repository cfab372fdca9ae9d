//! Alexandrov measure of the piecewise-linear lower hull of grid samples.
//!
//! The gradient cell of node `p` is `{g : u(q) − u(p) ≥ g·(q − p) for every node q}`.
//! In 2-D it is built by half-plane clipping: first against nearby nodes, then
//! by a cutting-plane loop that checks every cell vertex against all nodes.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::lattice::ScalarField;

/// Per-node Monge-Ampère mass; nodes that are not interior carry zero.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeMeasure {
    pub masses: Vec<f64>,
    /// Nodes whose gradient cell is bounded (all lattice neighbours active).
    pub interior: Vec<bool>,
}

impl NodeMeasure {
    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn interior_count(&self) -> usize {
        self.interior.iter().filter(|i| **i).count()
    }
}

type Poly = Vec<[f64; 2]>;

/// Clips a convex polygon by `g·d ≤ c`.
fn clip(poly: &Poly, d: [f64; 2], c: f64) -> Poly {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let side = |p: &[f64; 2]| p[0] * d[0] + p[1] * d[1] - c;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(&a), side(&b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            let t = sa / (sa - sb);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn shoelace(poly: &Poly) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        s += a[0] * b[1] - a[1] * b[0];
    }
    0.5 * s.abs()
}

struct Sample {
    pos: Vec<[f64; 2]>,
    val: Vec<f64>,
}

fn cell_area_2d(u: &ScalarField, p: usize, all: &Sample, tol: f64) -> f64 {
    let lat = u.lattice();
    let h = lat.spacing();
    let u0 = u.values()[p];
    let at = |off: [i64; 2]| lat.shifted(p, &off).and_then(|j| u.get(j));
    let (Some(xp), Some(xm), Some(yp), Some(ym)) = (at([1, 0]), at([-1, 0]), at([0, 1]), at([0, -1])) else {
        return 0.0;
    };
    // a hull vertex cannot sit above the midpoint of two samples
    for off in [[1, 0], [0, 1], [1, 1], [1, -1], [2, 1], [1, 2], [2, -1], [1, -2]] {
        if let (Some(a), Some(b)) = (at(off), at([-off[0], -off[1]])) {
            if a + b - 2.0 * u0 < -tol {
                return 0.0;
            }
        }
    }
    let (gx0, gx1) = ((u0 - xm) / h, (xp - u0) / h);
    let (gy0, gy1) = ((u0 - ym) / h, (yp - u0) / h);
    if gx0 > gx1 || gy0 > gy1 {
        return 0.0;
    }
    let mut poly: Poly = vec![[gx0, gy0], [gx1, gy0], [gx1, gy1], [gx0, gy1]];
    for a in -2i64..=2 {
        for b in -2i64..=2 {
            if (a, b) == (0, 0) || (a.abs() + b.abs() == 1) {
                continue;
            }
            if let Some(v) = at([a, b]) {
                poly = clip(&poly, [a as f64 * h, b as f64 * h], v - u0);
            }
        }
    }
    let x0 = lat.coord(p);
    for _ in 0..200 {
        if poly.len() < 3 {
            return 0.0;
        }
        let mut worst = (tol, usize::MAX);
        for g in &poly {
            for (q, (pos, val)) in all.pos.iter().zip(&all.val).enumerate() {
                let viol = g[0] * (pos[0] - x0[0]) + g[1] * (pos[1] - x0[1]) - (val - u0);
                if viol > worst.0 {
                    worst = (viol, q);
                }
            }
        }
        if worst.1 == usize::MAX {
            break;
        }
        let q = worst.1;
        poly = clip(&poly, [all.pos[q][0] - x0[0], all.pos[q][1] - x0[1]], all.val[q] - u0);
    }
    shoelace(&poly)
}

fn interior_2d(u: &ScalarField, p: usize) -> bool {
    if !u.is_active(p) {
        return false;
    }
    let lat = u.lattice();
    (-1i64..=1).all(|a| (-1i64..=1).all(|b| lat.shifted(p, &[a, b]).is_some_and(|j| u.is_active(j))))
}

/// Discrete Monge-Ampère measure `|∂u(p)|` of each interior node.
pub fn subdifferential_measure(u: &ScalarField) -> Result<NodeMeasure> {
    let lat = u.lattice();
    let n_nodes = lat.len();
    let scale = u.values().iter().filter(|v| v.is_finite()).fold(1.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale;
    match lat.dim() {
        1 => {
            let active: Vec<usize> = (0..n_nodes).filter(|&i| u.is_active(i)).collect();
            let x = |i: usize| lat.coord(i)[0];
            let mut masses = vec![0.0; n_nodes];
            let mut interior = vec![false; n_nodes];
            for (k, &p) in active.iter().enumerate() {
                if k == 0 || k + 1 == active.len() {
                    continue;
                }
                interior[p] = true;
                let u0 = u.values()[p];
                let lo = active[..k]
                    .iter()
                    .map(|&q| (u0 - u.values()[q]) / (x(p) - x(q)))
                    .fold(f64::NEG_INFINITY, f64::max);
                let hi = active[k + 1..]
                    .iter()
                    .map(|&q| (u.values()[q] - u0) / (x(q) - x(p)))
                    .fold(f64::INFINITY, f64::min);
                masses[p] = (hi - lo).max(0.0);
            }
            Ok(NodeMeasure { masses, interior })
        }
        2 => {
            let mut all = Sample { pos: Vec::new(), val: Vec::new() };
            for i in 0..n_nodes {
                if let Some(v) = u.get(i) {
                    let c = lat.coord(i);
                    all.pos.push([c[0], c[1]]);
                    all.val.push(v);
                }
            }
            let interior: Vec<bool> = (0..n_nodes).map(|p| interior_2d(u, p)).collect();
            let masses = (0..n_nodes)
                .into_par_iter()
                .map(|p| if interior[p] { cell_area_2d(u, p, &all, tol) } else { 0.0 })
                .collect();
            Ok(NodeMeasure { masses, interior })
        }
        n => invalid(format!("subdifferential measure supports n in 1..=2, got {n}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxLattice;

    #[test]
    fn one_dimensional_parabola() {
        let h = 0.125;
        let lat = BoxLattice::centered(1, 1.0, h).unwrap();
        let u = ScalarField::from_fn(lat, |x| 0.5 * x[0] * x[0]).unwrap();
        let m = subdifferential_measure(&u).unwrap();
        assert_eq!(m.interior_count(), 15);
        for (i, &mass) in m.masses.iter().enumerate() {
            if m.interior[i] {
                assert!((mass - h).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn cone_concentrates_at_apex() {
        let lat = BoxLattice::centered(2, 2.0, 0.125).unwrap();
        let apex = lat.node_at(&[0.0, 0.0]).unwrap();
        let u = ScalarField::from_fn(lat, |x| (x[0] * x[0] + x[1] * x[1]).sqrt()).unwrap();
        let m = subdifferential_measure(&u).unwrap();
        let pi = std::f64::consts::PI;
        assert!((m.masses[apex] - pi).abs() < 0.05 * pi, "{}", m.masses[apex]);
        // nodes with a farther sample on the same ray carry no mass
        let inner = u.lattice().node_at(&[0.5, 0.25]).unwrap();
        assert!(m.masses[inner].abs() < 1e-12);
    }

    #[test]
    fn quadratic_total_is_gradient_image_area() {
        let h = 0.125;
        let lat = BoxLattice::centered(2, 1.0, h).unwrap();
        let a = [[2.0, 0.5], [0.5, 1.0]];
        let u = ScalarField::from_fn(lat, |x| {
            0.5 * (a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1])
        })
        .unwrap();
        let m = subdifferential_measure(&u).unwrap();
        // interior cells tile the image under A of the square of half-width 1 − h/2
        let r = 1.0 - h / 2.0;
        let corners = [[-r, -r], [r, -r], [r, r], [-r, r]];
        let image: Poly = corners
            .iter()
            .map(|c| [a[0][0] * c[0] + a[0][1] * c[1], a[1][0] * c[0] + a[1][1] * c[1]])
            .collect();
        let expected = shoelace(&image);
        let det = 2.0 - 0.25;
        assert!((expected - det * (2.0 * r) * (2.0 * r)).abs() < 1e-12);
        assert!((m.total() - expected).abs() < 1e-9 * expected, "{} vs {expected}", m.total());
    }

    #[test]
    fn affine_shift_keeps_masses() {
        let lat = BoxLattice::centered(2, 1.0, 0.125).unwrap();
        let u = ScalarField::from_fn(lat.clone(), |x| (x[0] * x[0] + x[1] * x[1]).powi(2) / 4.0 + x[0] * x[0]).unwrap();
        let w = u.map(|x, v| v + 0.7 * x[0] - 1.3 * x[1] + 2.0).unwrap();
        let m1 = subdifferential_measure(&u).unwrap();
        let m2 = subdifferential_measure(&w).unwrap();
        for (a, b) in m1.masses.iter().zip(&m2.masses) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn concave_function_has_no_mass() {
        let lat = BoxLattice::centered(2, 1.0, 0.25).unwrap();
        let u = ScalarField::from_fn(lat, |x| -(x[0] * x[0] + x[1] * x[1])).unwrap();
        assert_eq!(subdifferential_measure(&u).unwrap().total(), 0.0);
    }
}

use super::geometry::{direction_data, displacement, norm, Arm, ArmEnd, Geometry};
use super::stencil::StencilSet;
use crate::error::{invalid, Result};
use crate::lattice::{BoxLattice, PeriodicField, ScalarField, TorusLattice};
use crate::quadratic::QuadraticPart;

/// Factor floor relative to the operator scale.
pub const FACTOR_FLOOR_REL: f64 = 1e-12;

pub(crate) fn check_dims(n_lattice: usize, a: &QuadraticPart, stencil: &StencilSet) -> Result<()> {
    if a.dim() != n_lattice || stencil.dim() != n_lattice {
        return invalid(format!(
            "dimension mismatch: lattice {n_lattice}, A {}, stencil {}",
            a.dim(),
            stencil.dim()
        ));
    }
    Ok(())
}

pub(crate) fn periodic_geometry(lattice: &TorusLattice, a: &QuadraticPart, stencil: &StencilSet, floor: f64) -> Geometry {
    let n = lattice.dim();
    let spacings = lattice.spacings();
    let (quad, bases) = direction_data(stencil, &spacings, a);
    let dirs = stencil.directions();
    let lens: Vec<f64> = dirs.iter().map(|d| norm(&displacement(d, &spacings))).collect();
    let mut arms = Vec::with_capacity(lattice.len() * dirs.len());
    for node in 0..lattice.len() {
        for (k, d) in dirs.iter().enumerate() {
            let minus: Vec<i64> = d[..n].iter().map(|c| -c).collect();
            arms.push([
                Arm { end: ArmEnd::Node(lattice.shifted(node, &d[..n])), len: lens[k] },
                Arm { end: ArmEnd::Node(lattice.shifted(node, &minus)), len: lens[k] },
            ]);
        }
    }
    Geometry { rows: (0..lattice.len()).collect(), n_dirs: dirs.len(), arms, quad, bases, floor }
}

/// Rows at active nodes whose every arm lands on an active node.
pub(crate) fn box_geometry(u: &ScalarField, a: &QuadraticPart, stencil: &StencilSet, floor: f64) -> Geometry {
    let lattice: &BoxLattice = u.lattice();
    let n = lattice.dim();
    let spacings = vec![lattice.spacing(); n];
    let (quad, bases) = direction_data(stencil, &spacings, a);
    let dirs = stencil.directions();
    let lens: Vec<f64> = dirs.iter().map(|d| norm(&displacement(d, &spacings))).collect();
    let mut rows = Vec::new();
    let mut arms = Vec::new();
    'nodes: for node in 0..lattice.len() {
        if !u.is_active(node) {
            continue;
        }
        let mut local = Vec::with_capacity(dirs.len());
        for (k, d) in dirs.iter().enumerate() {
            let minus: Vec<i64> = d[..n].iter().map(|c| -c).collect();
            let p = lattice.shifted(node, &d[..n]).filter(|&j| u.is_active(j));
            let m = lattice.shifted(node, &minus).filter(|&j| u.is_active(j));
            match (p, m) {
                (Some(p), Some(m)) => local.push([
                    Arm { end: ArmEnd::Node(p), len: lens[k] },
                    Arm { end: ArmEnd::Node(m), len: lens[k] },
                ]),
                _ => continue 'nodes,
            }
        }
        rows.push(node);
        arms.extend(local);
    }
    Geometry { rows, n_dirs: dirs.len(), arms, quad, bases, floor }
}

/// Operator values on a lattice, `NaN` where the operator is undefined.
#[derive(Debug, Clone, PartialEq)]
pub struct MaEvaluation {
    pub values: Vec<f64>,
    /// Index into the physically orthogonal bases of the active (minimizing) basis.
    pub active_basis: Vec<Option<usize>>,
    /// Nodes whose active basis contains a floored factor.
    pub floored: Vec<bool>,
}

impl MaEvaluation {
    fn from_rows(n_nodes: usize, geom: &Geometry, u: &[f64]) -> Self {
        let mut values = vec![f64::NAN; n_nodes];
        let mut active_basis = vec![None; n_nodes];
        let mut floored = vec![false; n_nodes];
        for (r, rv) in geom.eval(u).into_iter().enumerate() {
            let node = geom.rows[r];
            values[node] = rv.value;
            active_basis[node] = Some(rv.basis);
            floored[node] = rv.floored;
        }
        Self { values, active_basis, floored }
    }

    pub fn floored_nodes(&self) -> usize {
        self.floored.iter().filter(|f| **f).count()
    }

    pub fn into_scalar_field(self, lattice: &BoxLattice) -> Result<ScalarField> {
        ScalarField::from_partial(lattice.clone(), self.values)
    }
}

/// Monotone wide-stencil discretization of `det(A + D²v)` on the torus.
pub fn ma_operator_periodic(v: &PeriodicField, a: &QuadraticPart, stencil: &StencilSet) -> Result<MaEvaluation> {
    check_dims(v.lattice().dim(), a, stencil)?;
    let geom = periodic_geometry(v.lattice(), a, stencil, FACTOR_FLOOR_REL);
    Ok(MaEvaluation::from_rows(v.lattice().len(), &geom, v.values()))
}

/// Same operator on a box; defined at nodes whose arms stay on active nodes.
pub fn ma_operator_box(u: &ScalarField, a: &QuadraticPart, stencil: &StencilSet) -> Result<MaEvaluation> {
    check_dims(u.lattice().dim(), a, stencil)?;
    let geom = box_geometry(u, a, stencil, FACTOR_FLOOR_REL);
    Ok(MaEvaluation::from_rows(u.lattice().len(), &geom, u.values()))
}

/// Linearization at one node: active basis, its directions and weights, and
/// the resulting sparse derivative row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedRow {
    pub node: usize,
    pub basis: usize,
    pub directions: Vec<[i64; 3]>,
    /// Discrete analog of the cofactor coefficients `det(D²φ) φ^{ij}` along the basis.
    pub weights: Vec<f64>,
    /// `(node, ∂MA_h/∂u_node)` pairs, center last.
    pub derivative: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedCoeffs {
    pub rows: Vec<LinearizedRow>,
}

impl LinearizedCoeffs {
    fn build(geom: &Geometry, stencil: &StencilSet, u: &[f64]) -> Self {
        let values = geom.eval(u);
        let rows = values
            .iter()
            .enumerate()
            .map(|(r, rv)| {
                let weights = geom.weights(r, rv.basis, u);
                let mut derivative = Vec::new();
                geom.row_derivative(r, rv.basis, &weights, &mut derivative);
                LinearizedRow {
                    node: geom.rows[r],
                    basis: rv.basis,
                    directions: geom.bases[rv.basis].iter().map(|&k| stencil.directions()[k]).collect(),
                    weights,
                    derivative,
                }
            })
            .collect();
        Self { rows }
    }

    /// Applies the linearization to a perturbation, returning one value per row.
    pub fn apply(&self, du: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|r| r.derivative.iter().map(|(j, c)| c * du[*j]).sum()).collect()
    }
}

pub fn linearize_periodic(v: &PeriodicField, a: &QuadraticPart, stencil: &StencilSet) -> Result<LinearizedCoeffs> {
    check_dims(v.lattice().dim(), a, stencil)?;
    let geom = periodic_geometry(v.lattice(), a, stencil, FACTOR_FLOOR_REL);
    Ok(LinearizedCoeffs::build(&geom, stencil, v.values()))
}

pub fn linearize_box(u: &ScalarField, a: &QuadraticPart, stencil: &StencilSet) -> Result<LinearizedCoeffs> {
    check_dims(u.lattice().dim(), a, stencil)?;
    let geom = box_geometry(u, a, stencil, FACTOR_FLOOR_REL);
    Ok(LinearizedCoeffs::build(&geom, stencil, u.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_torus(res: usize) -> TorusLattice {
        TorusLattice::unit(2, res).unwrap()
    }

    #[test]
    fn flat_identity_gives_one() {
        let v = PeriodicField::zeros(unit_torus(16));
        let s = StencilSet::new(2, 2).unwrap();
        let ev = ma_operator_periodic(&v, &QuadraticPart::identity(2), &s).unwrap();
        assert!(ev.values.iter().all(|x| (*x - 1.0).abs() < 1e-15));
        assert_eq!(ev.floored_nodes(), 0);
    }

    #[test]
    fn anisotropic_constant_matrix_attains_det() {
        let v = PeriodicField::zeros(unit_torus(16));
        let a = QuadraticPart::diagonal(&[2.0, 0.5]).unwrap();
        for w in 1..=3 {
            let s = StencilSet::new(2, w).unwrap();
            // brute force over all bases of the constant quadratic
            let mut best = f64::INFINITY;
            for b in s.bases() {
                let p: f64 = b
                    .iter()
                    .map(|&k| {
                        let d = s.directions()[k];
                        a.rayleigh(&[d[0] as f64, d[1] as f64])
                    })
                    .product();
                best = best.min(p);
            }
            assert!((best - 1.0).abs() < 1e-15);
            let ev = ma_operator_periodic(&v, &a, &s).unwrap();
            assert!(ev.values.iter().all(|x| (*x - best).abs() < 1e-15));
        }
    }

    #[test]
    fn quadratic_on_box_is_exact() {
        let lat = BoxLattice::centered(2, 1.0, 0.125).unwrap();
        let a = [[1.5, 0.0], [0.0, 0.8]];
        let u = ScalarField::from_fn(lat, |x| 0.5 * (a[0][0] * x[0] * x[0] + a[1][1] * x[1] * x[1])).unwrap();
        let s = StencilSet::new(2, 2).unwrap();
        let ev = ma_operator_box(&u, &QuadraticPart::zero(2), &s).unwrap();
        let mut count = 0;
        for v in ev.values.iter().filter(|v| v.is_finite()) {
            count += 1;
            assert!((v - 1.2).abs() < 1e-12);
        }
        assert_eq!(count, 13 * 13);
    }

    #[test]
    fn linearization_examples() {
        let v = PeriodicField::zeros(unit_torus(8));
        let s = StencilSet::new(2, 1).unwrap();
        let lin = linearize_periodic(&v, &QuadraticPart::identity(2), &s).unwrap();
        for row in &lin.rows {
            assert_eq!(row.basis, 0);
            assert_eq!(row.weights, vec![1.0, 1.0]);
        }
        let a = QuadraticPart::diagonal(&[2.0, 0.5]).unwrap();
        let lin = linearize_periodic(&v, &a, &s).unwrap();
        for row in &lin.rows {
            // directions are ordered (0,1), (1,0): weight on (0,1) is the x-factor
            assert_eq!(row.directions, vec![[0, 1, 0], [1, 0, 0]]);
            assert_eq!(row.weights, vec![2.0, 0.5]);
        }
    }

    #[test]
    fn floored_direction_has_zero_weight() {
        let lat = BoxLattice::centered(1, 1.0, 0.25).unwrap();
        let u = ScalarField::from_fn(lat, |x| -x[0] * x[0]).unwrap();
        let s = StencilSet::new(1, 1).unwrap();
        let lin = linearize_box(&u, &QuadraticPart::zero(1), &s).unwrap();
        assert!(lin.rows.iter().all(|r| r.weights == vec![0.0]));
        let ev = ma_operator_box(&u, &QuadraticPart::zero(1), &s).unwrap();
        assert_eq!(ev.floored_nodes(), 7);
    }

    #[test]
    fn monotone_in_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let lat = unit_torus(12);
        let s = StencilSet::new(2, 2).unwrap();
        let a = QuadraticPart::identity(2);
        for _ in 0..10 {
            let h2 = 1.0 / 144.0;
            let vals: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-0.05..0.05) * h2).collect();
            let v = PeriodicField::new(lat.clone(), vals.clone()).unwrap();
            let base = ma_operator_periodic(&v, &a, &s).unwrap();
            let node = rng.random_range(0..lat.len());
            let mut bumped = vals;
            bumped[node] += 1e-3 * h2;
            let v2 = PeriodicField::new(lat.clone(), bumped).unwrap();
            let after = ma_operator_periodic(&v2, &a, &s).unwrap();
            for i in 0..lat.len() {
                if i != node {
                    assert!(after.values[i] >= base.values[i] - 1e-15);
                }
            }
        }
    }
}

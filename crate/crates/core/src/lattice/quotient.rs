use super::{ScalarField, SNAP_TOL};
use crate::error::{invalid, Result};

/// Second incremental quotient `(u(x+d) + u(x-d) - 2u(x)) / ‖d‖²` with `d = scale · e`.
///
/// `d` must be a whole number of lattice steps on every axis. Nodes whose
/// arms leave the lattice (or touch masked nodes) are masked in the output.
pub fn second_quotient(u: &ScalarField, e: &[i64], scale: f64) -> Result<ScalarField> {
    let lattice = u.lattice();
    let n = lattice.dim();
    if e.len() != n {
        return invalid(format!("direction has {} components, lattice is {n}-dimensional", e.len()));
    }
    if e.iter().all(|&k| k == 0) {
        return invalid("second quotient direction must be nonzero");
    }
    if !(scale.is_finite() && scale > 0.0) {
        return invalid(format!("scale must be positive, got {scale}"));
    }
    let h = lattice.spacing();
    let mut steps = [0i64; 3];
    let mut norm2 = 0.0;
    for a in 0..n {
        let d = scale * e[a] as f64;
        norm2 += d * d;
        let t = d / h;
        if (t - t.round()).abs() > SNAP_TOL * t.abs().max(1.0) {
            return invalid(format!("displacement {d} is not a multiple of the spacing {h}"));
        }
        steps[a] = t.round() as i64;
    }
    let minus: Vec<i64> = steps[..n].iter().map(|s| -s).collect();
    let out = (0..lattice.len())
        .map(|i| {
            let c = u.get(i)?;
            let p = lattice.shifted(i, &steps[..n]).and_then(|j| u.get(j))?;
            let m = lattice.shifted(i, &minus).and_then(|j| u.get(j))?;
            Some((p + m - 2.0 * c) / norm2)
        })
        .map(|v| v.unwrap_or(f64::NAN))
        .collect();
    ScalarField::from_partial(lattice.clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxLattice;

    #[test]
    fn quadratic_gives_rayleigh_quotient() {
        let lat = BoxLattice::centered(2, 3.0, 0.5).unwrap();
        let a = [[2.0, 0.5], [0.5, 1.0]];
        let u = ScalarField::from_fn(lat, |x| {
            0.5 * (a[0][0] * x[0] * x[0] + 2.0 * a[0][1] * x[0] * x[1] + a[1][1] * x[1] * x[1])
        })
        .unwrap();
        for e in [[1i64, 0], [0, 1], [1, 1], [1, -2], [2, 1]] {
            let q = second_quotient(&u, &e, 1.0).unwrap();
            let ef = [e[0] as f64, e[1] as f64];
            let expect = (a[0][0] * ef[0] * ef[0] + 2.0 * a[0][1] * ef[0] * ef[1] + a[1][1] * ef[1] * ef[1])
                / (ef[0] * ef[0] + ef[1] * ef[1]);
            let mut seen = 0;
            for i in 0..q.lattice().len() {
                if let Some(v) = q.get(i) {
                    seen += 1;
                    assert!((v - expect).abs() < 1e-12);
                }
            }
            assert!(seen > 0);
        }
    }

    #[test]
    fn quartic_at_origin() {
        let lat = BoxLattice::centered(1, 2.0, 0.25).unwrap();
        let u = ScalarField::from_fn(lat.clone(), |x| x[0].powi(4)).unwrap();
        let q = second_quotient(&u, &[1], 1.0).unwrap();
        assert_eq!(q.value_at(&[0.0]), Some(2.0));
        // arms from x = 1.5 leave the box
        assert_eq!(q.value_at(&[1.5]), None);
    }

    #[test]
    fn rejects_zero_and_off_lattice() {
        let lat = BoxLattice::centered(1, 2.0, 0.25).unwrap();
        let u = ScalarField::from_fn(lat, |x| x[0]).unwrap();
        assert!(second_quotient(&u, &[0], 1.0).is_err());
        assert!(second_quotient(&u, &[1], 0.3).is_err());
    }
}

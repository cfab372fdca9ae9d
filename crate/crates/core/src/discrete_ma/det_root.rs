use nalgebra::DMatrix;

use crate::error::{invalid, MaError, Result};

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return invalid(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols()));
    }
    Ok(n)
}

/// `F(M) = det(M)^{1/n}`; non-positive determinants map to 0.
pub fn det_root(m: &DMatrix<f64>) -> Result<f64> {
    let n = check_square(m)?;
    let d = m.determinant();
    Ok(if d > 0.0 { d.powf(1.0 / n as f64) } else { 0.0 })
}

/// `∂F/∂M = (1/n) det(M)^{1/n} M⁻¹`, symmetrized.
pub fn det_root_grad(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = check_square(m)?;
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| MaError::Domain("det_root_grad needs a positive-definite matrix".into()))?;
    let inv = chol.inverse();
    let f = m.determinant().powf(1.0 / n as f64);
    let g = inv * (f / n as f64);
    Ok((&g + g.transpose()) * 0.5)
}

/// `F(M1) + ⟨F'(M1), M2 − M1⟩ − F(M2)`, nonnegative by concavity of `F` on SPD matrices.
pub fn concavity_gap(m1: &DMatrix<f64>, m2: &DMatrix<f64>) -> Result<f64> {
    if m1.shape() != m2.shape() {
        return invalid("matrices must have the same shape");
    }
    if m2.clone().cholesky().is_none() {
        return Err(MaError::Domain("concavity_gap needs positive-definite matrices".into()));
    }
    let g = det_root_grad(m1)?;
    let inner = g.component_mul(&(m2 - m1)).sum();
    Ok(det_root(m1)? + inner - det_root(m2)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        &b * b.transpose() + DMatrix::identity(n, n) * rng.random_range(0.05..1.0)
    }

    #[test]
    fn closed_forms() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert_eq!(det_root(&i).unwrap(), 1.0);
        assert_eq!(det_root_grad(&i).unwrap(), i.clone() * 0.5);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0]));
        assert!((det_root(&d).unwrap() - 2.0).abs() < 1e-15);
        let g = det_root_grad(&d).unwrap();
        assert!((g[(0, 0)] - 0.25).abs() < 1e-15 && (g[(1, 1)] - 1.0).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let m = random_spd(&mut rng, 2);
            let g = det_root_grad(&m).unwrap();
            let step = 1e-6;
            for i in 0..2 {
                for j in 0..2 {
                    // symmetric perturbation of the (i, j) and (j, i) pair
                    let mut e = DMatrix::zeros(2, 2);
                    e[(i, j)] += 0.5;
                    e[(j, i)] += 0.5;
                    let fp = det_root(&(&m + &e * step)).unwrap();
                    let fm = det_root(&(&m - &e * step)).unwrap();
                    let fd = (fp - fm) / (2.0 * step);
                    let an = g.component_mul(&e).sum();
                    assert!((fd - an).abs() < 1e-6, "{fd} vs {an}");
                }
            }
        }
    }

    #[test]
    fn gap_examples() {
        let i = DMatrix::<f64>::identity(2, 2);
        assert_eq!(concavity_gap(&i, &i).unwrap(), 0.0);
        let a = DMatrix::<f64>::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 1.0]);
        let expected = a.trace() / 2.0 - a.determinant().sqrt();
        assert!((concavity_gap(&i, &a).unwrap() - expected).abs() < 1e-14);
        assert!(det_root_grad(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
    }

    #[test]
    fn gap_nonnegative_on_seeded_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for k in 0..1000 {
            let n = 1 + k % 3;
            let m1 = random_spd(&mut rng, n);
            let m2 = random_spd(&mut rng, n);
            assert!(concavity_gap(&m1, &m2).unwrap() >= -1e-12);
        }
    }
}

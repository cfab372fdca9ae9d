use super::{PeriodicField, Provenance, MAX_DIM};
use crate::error::{invalid, Result};

/// Radial profile `ρ(r)` supported in the unit ball (normalization is done on the grid).
#[derive(Debug, Clone, Copy)]
pub enum MollifierProfile {
    /// `exp(-1 / (1 - r²))` for `r < 1`.
    StandardBump,
    /// `(1 - r²)³` for `r < 1`.
    Polynomial,
    /// Any nonnegative profile vanishing for `r >= 1`.
    Custom(fn(f64) -> f64),
}

impl MollifierProfile {
    pub fn eval(&self, r: f64) -> f64 {
        if r >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierProfile::StandardBump => (-1.0 / (1.0 - r * r)).exp(),
            MollifierProfile::Polynomial => (1.0 - r * r).powi(3),
            MollifierProfile::Custom(f) => f(r).max(0.0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec {
    pub profile: MollifierProfile,
    /// Smoothing radius in length units.
    pub eps: f64,
}

impl MollifierSpec {
    pub fn new(eps: f64) -> Self {
        Self { profile: MollifierProfile::StandardBump, eps }
    }

    pub fn with_profile(mut self, profile: MollifierProfile) -> Self {
        self.profile = profile;
        self
    }
}

pub(crate) struct Kernel {
    pub offsets: Vec<[i64; MAX_DIM]>,
    pub weights: Vec<f64>,
}

/// Sampled, renormalized kernel `ρ_ε` on the lattice spacing.
pub(crate) fn build_kernel(spacings: &[f64], spec: &MollifierSpec) -> Kernel {
    let n = spacings.len();
    let reach: Vec<i64> = spacings.iter().map(|h| (spec.eps / h).floor() as i64).collect();
    let mut offsets = Vec::new();
    let mut weights = Vec::new();
    let mut k = [0i64; MAX_DIM];
    for a in 0..n {
        k[a] = -reach[a];
    }
    loop {
        let r2: f64 = (0..n).map(|a| (k[a] as f64 * spacings[a]).powi(2)).sum();
        let w = spec.profile.eval(r2.sqrt() / spec.eps);
        if w > 0.0 {
            offsets.push(k);
            weights.push(w);
        }
        // odometer over the offset box
        let mut axis = n;
        loop {
            if axis == 0 {
                let total: f64 = weights.iter().sum();
                for w in &mut weights {
                    *w /= total;
                }
                return Kernel { offsets, weights };
            }
            axis -= 1;
            if k[axis] < reach[axis] {
                k[axis] += 1;
                break;
            }
            k[axis] = -reach[axis];
        }
    }
}

/// Discrete periodic convolution `f_ε = ρ_ε * f` with unit-mass weights.
///
/// Requires `ε >= 2 · max h_i` so the kernel is resolved by the grid. The
/// output is clamped to `[min f, max f]`, which the exact convex combination
/// already satisfies up to rounding.
pub fn mollify(f: &PeriodicField, spec: &MollifierSpec) -> Result<PeriodicField> {
    let lattice = f.lattice();
    let hmax = lattice.max_spacing();
    if !(spec.eps.is_finite() && spec.eps >= 2.0 * hmax) {
        return invalid(format!(
            "mollifier radius {} is below twice the grid spacing {}",
            spec.eps, hmax
        ));
    }
    let kernel = build_kernel(&lattice.spacings(), spec);
    let (lo, hi) = (f.min(), f.max());
    let src = f.values();
    let n = lattice.dim();
    let values: Vec<f64> = (0..lattice.len())
        .map(|node| {
            let mut acc = 0.0;
            for (off, w) in kernel.offsets.iter().zip(&kernel.weights) {
                acc += w * src[lattice.shifted(node, &off[..n])];
            }
            acc.clamp(lo, hi)
        })
        .collect();
    Ok(PeriodicField::new(lattice.clone(), values)?.with_provenance(Provenance::Mollified { eps: spec.eps }))
}

/// `f̃ = f_ε - ⨍ f_ε + det A`; fails if the shifted field is not strictly positive.
pub fn normalize_rhs(f_eps: &PeriodicField, det_a: f64) -> Result<PeriodicField> {
    if !(det_a > 0.0) {
        return invalid(format!("det A must be positive, got {det_a}"));
    }
    let shift = det_a - f_eps.cell_average();
    let out = f_eps.shifted_by(shift);
    let min = out.min();
    if min <= 0.0 {
        return Err(crate::error::MaError::InfeasibleNormalization { min });
    }
    Ok(out.with_provenance(Provenance::Normalized))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::TorusLattice;
    use std::f64::consts::PI;

    fn total_variation(v: &[f64]) -> f64 {
        let n = v.len();
        (0..n).map(|i| (v[(i + 1) % n] - v[i]).abs()).sum()
    }

    /// Adaptive Simpson quadrature, independent of the lattice code.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let left = (m - a) / 6.0 * (f(a) + 4.0 * f(lm) + f(m));
        let right = (b - m) / 6.0 * (f(m) + 4.0 * f(rm) + f(b));
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, tol / 2.0, depth - 1) + simpson(f, m, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn kernel_has_unit_mass() {
        for profile in [MollifierProfile::StandardBump, MollifierProfile::Polynomial] {
            let k = build_kernel(&[1.0 / 32.0, 1.0 / 32.0], &MollifierSpec::new(0.1).with_profile(profile));
            let s: f64 = k.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            assert!(k.weights.iter().all(|w| *w >= 0.0));
        }
    }

    #[test]
    fn constant_is_fixed() {
        let t = TorusLattice::unit(2, 32).unwrap();
        let f = PeriodicField::constant(t, 1.7).unwrap();
        let g = mollify(&f, &MollifierSpec::new(0.125)).unwrap();
        assert!(g.values().iter().all(|v| (v - 1.7).abs() < 1e-14));
    }

    #[test]
    fn cosine_multiplier_matches_quadrature() {
        let eps = 1.0 / 16.0;
        let t = TorusLattice::unit(1, 1024).unwrap();
        let f = PeriodicField::from_fn(t, |x| (2.0 * PI * x[0]).cos()).unwrap();
        // sampling error of the kernel: spectral for the bump, algebraic for the polynomial
        for (profile, tol) in [(MollifierProfile::StandardBump, 1e-10), (MollifierProfile::Polynomial, 1e-7)] {
            let spec = MollifierSpec::new(eps).with_profile(profile);
            let g = mollify(&f, &spec).unwrap();
            let rho = |r: f64| profile.eval(r.abs());
            let mass = simpson(&rho, -1.0, 1.0, 1e-14, 40);
            let m = simpson(&|r: f64| rho(r) * (2.0 * PI * eps * r).cos(), -1.0, 1.0, 1e-14, 40) / mass;
            for (gv, fv) in g.values().iter().zip(f.values()) {
                assert!((gv - m * fv).abs() < tol, "{gv} vs {}", m * fv);
            }
        }
    }

    #[test]
    fn step_total_variation_does_not_grow() {
        let t = TorusLattice::unit(1, 128).unwrap();
        let f = PeriodicField::from_fn(t, |x| if x[0] < 0.4 { 2.0 } else { 0.5 }).unwrap();
        let g = mollify(&f, &MollifierSpec::new(1.0 / 16.0)).unwrap();
        assert!(total_variation(g.values()) <= total_variation(f.values()) + 1e-12);
        assert!((g.cell_average() - f.cell_average()).abs() < 1e-14);
    }

    #[test]
    fn rejects_unresolved_radius() {
        let t = TorusLattice::unit(1, 16).unwrap();
        let f = PeriodicField::constant(t, 1.0).unwrap();
        assert!(mollify(&f, &MollifierSpec::new(0.1)).is_err());
    }

    #[test]
    fn normalize_examples() {
        let t = TorusLattice::unit(1, 64).unwrap();
        let f = PeriodicField::from_fn(t.clone(), |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos()).unwrap();
        let same = normalize_rhs(&f, 1.0).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-15);
        }
        let one = PeriodicField::constant(t, 1.0).unwrap();
        let two = normalize_rhs(&one, 2.0).unwrap();
        assert!(two.values().iter().all(|v| *v == 2.0));
        match normalize_rhs(&f, 0.4) {
            Err(crate::error::MaError::InfeasibleNormalization { min }) => assert!((min + 0.1).abs() < 1e-12),
            other => panic!("expected infeasible normalization, got {other:?}"),
        }
    }
}

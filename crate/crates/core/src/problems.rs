//! Builtin right-hand sides and closed-form oracles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::lattice::{PeriodicField, TorusLattice};

/// `f ≡ c`.
pub fn constant(lattice: TorusLattice, c: f64) -> Result<PeriodicField> {
    PeriodicField::constant(lattice, c)
}

/// `f = 1 + amp·cos(2πx₁)`.
pub fn cosine_1d(lattice: TorusLattice, amp: f64) -> Result<PeriodicField> {
    if !(amp.abs() < 1.0) {
        return invalid(format!("cosine amplitude must lie in (-1, 1), got {amp}"));
    }
    PeriodicField::from_fn(lattice, |x| 1.0 + amp * (2.0 * PI * x[0]).cos())
}

/// Exact solution of `1 + v'' = 1 + amp·cos(2πx)` with zero mean.
pub fn cosine_profile(x: f64, amp: f64) -> f64 {
    -amp * (2.0 * PI * x).cos() / (4.0 * PI * PI)
}

/// `f = ∏ (1 + amp·cos(2πx_i))`, whose solution with `A = I` is a sum of cosine profiles.
pub fn separable(lattice: TorusLattice, amp: f64) -> Result<PeriodicField> {
    if !(amp.abs() < 1.0) {
        return invalid(format!("separable amplitude must lie in (-1, 1), got {amp}"));
    }
    PeriodicField::from_fn(lattice, |x| x.iter().map(|c| 1.0 + amp * (2.0 * PI * c).cos()).product())
}

/// `hi` on cells where `Σ⌊2x_i⌋` is even, `lo` elsewhere.
pub fn checkerboard(lattice: TorusLattice, hi: f64, lo: f64) -> Result<PeriodicField> {
    if !(lo > 0.0 && hi > 0.0) {
        return invalid("checkerboard values must be positive");
    }
    let periods = lattice.periods().to_vec();
    PeriodicField::from_fn(lattice, |x| {
        let parity: i64 = x.iter().zip(&periods).map(|(c, p)| (2.0 * c / p).floor() as i64).sum();
        if parity.rem_euclid(2) == 0 { hi } else { lo }
    })
}

/// Independent uniform values in `[lo, hi]` at every node.
pub fn seeded_noise(lattice: TorusLattice, seed: u64, lo: f64, hi: f64) -> Result<PeriodicField> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return invalid(format!("noise bounds must satisfy 0 < lo <= hi, got [{lo}, {hi}]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..lattice.len()).map(|_| if lo == hi { lo } else { rng.random_range(lo..=hi) }).collect();
    PeriodicField::new(lattice, values)
}

/// Radial oracle `u = ¼|x|⁴` in the plane.
pub fn radial_solution(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    0.25 * r2 * r2
}

/// `det D²(¼|x|⁴) = 3|x|⁴` in the plane.
pub fn radial_rhs(x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|c| c * c).sum();
    3.0 * r2 * r2
}

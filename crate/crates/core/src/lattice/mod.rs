//! Lattices and scalar fields shared by every solver and diagnostic.
//!
//! Two lattice kinds exist: [`TorusLattice`] for periodic data on one
//! fundamental cell `∏[0, a_i)`, and [`BoxLattice`] for samples on a closed box
//! with uniform spacing. Node storage is row-major (first axis slowest).

mod field;
pub mod grid_io;
mod mollify;
mod quotient;
mod resample;

pub use field::{PeriodicField, ProblemBounds, Provenance, ScalarField};
pub use mollify::{mollify, normalize_rhs, MollifierProfile, MollifierSpec};
pub use quotient::second_quotient;
pub use resample::{resample, AffineMap};

use crate::error::{invalid, Result};

/// Maximum supported dimension.
pub const MAX_DIM: usize = 3;

/// Fixed-size multi-index; only the first `n` entries are meaningful.
pub type MultiIndex = [i64; MAX_DIM];

/// Relative tolerance used when snapping coordinates onto lattice nodes.
pub(crate) const SNAP_TOL: f64 = 1e-9;

fn row_major_index(dims: &[usize], idx: &MultiIndex) -> usize {
    let mut flat = 0usize;
    for (axis, &d) in dims.iter().enumerate() {
        flat = flat * d + idx[axis] as usize;
    }
    flat
}

fn row_major_multi(dims: &[usize], mut flat: usize) -> MultiIndex {
    let mut idx = [0i64; MAX_DIM];
    for axis in (0..dims.len()).rev() {
        idx[axis] = (flat % dims[axis]) as i64;
        flat /= dims[axis];
    }
    idx
}

/// Periodic lattice on the torus `∏ ℝ/(a_i ℤ)` with `N_i` nodes per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusLattice {
    periods: Vec<f64>,
    dims: Vec<usize>,
}

impl TorusLattice {
    /// `make_torus`: node `k` along axis `i` sits at `k · a_i / N_i`.
    pub fn new(periods: &[f64], resolution: &[usize]) -> Result<Self> {
        let n = periods.len();
        if n == 0 || n > MAX_DIM {
            return invalid(format!("dimension must be 1..={MAX_DIM}, got {n}"));
        }
        if resolution.len() != n {
            return invalid(format!(
                "resolution has {} entries for {} periods",
                resolution.len(),
                n
            ));
        }
        if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return invalid(format!("period must be positive, got {p}"));
        }
        if let Some(r) = resolution.iter().find(|r| **r < 4) {
            return invalid(format!("resolution must be >= 4 per axis, got {r}"));
        }
        Ok(Self { periods: periods.to_vec(), dims: resolution.to_vec() })
    }

    /// Unit torus `[0,1)ⁿ` with `res` nodes per axis.
    pub fn unit(n: usize, res: usize) -> Result<Self> {
        Self::new(&vec![1.0; n], &vec![res; n])
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.periods[axis] / self.dims[axis] as f64
    }

    pub fn spacings(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.spacing(i)).collect()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacings().into_iter().fold(0.0, f64::max)
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, idx: &MultiIndex) -> usize {
        row_major_index(&self.dims, idx)
    }

    pub fn multi_index(&self, flat: usize) -> MultiIndex {
        row_major_multi(&self.dims, flat)
    }

    /// Flat index of `flat + offset`, wrapping every axis.
    pub fn shifted(&self, flat: usize, offset: &[i64]) -> usize {
        let mut idx = self.multi_index(flat);
        for axis in 0..self.dim() {
            idx[axis] = (idx[axis] + offset[axis]).rem_euclid(self.dims[axis] as i64);
        }
        self.index(&idx)
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim()).map(|i| idx[i] as f64 * self.spacing(i)).collect()
    }

    /// Node hit by the physical point `x` after reduction modulo the periods,
    /// or `None` if `x` is not a lattice point.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0i64; MAX_DIM];
        for axis in 0..self.dim() {
            let t = x[axis] / self.spacing(axis);
            let r = t.round();
            if (t - r).abs() > SNAP_TOL * t.abs().max(1.0) {
                return None;
            }
            idx[axis] = (r as i64).rem_euclid(self.dims[axis] as i64);
        }
        Some(self.index(&idx))
    }
}

/// Uniform box lattice `∏[lo_i, hi_i]` with spacing `h` (both ends are nodes).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxLattice {
    lo: Vec<f64>,
    dims: Vec<usize>,
    h: f64,
}

impl BoxLattice {
    pub fn new(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        let n = lo.len();
        if n == 0 || n > MAX_DIM || hi.len() != n {
            return invalid("box bounds must have matching length 1..=3");
        }
        if !(h.is_finite() && h > 0.0) {
            return invalid(format!("spacing must be positive, got {h}"));
        }
        let mut dims = Vec::with_capacity(n);
        for i in 0..n {
            let steps = (hi[i] - lo[i]) / h;
            let r = steps.round();
            if (steps - r).abs() > SNAP_TOL * steps.abs().max(1.0) {
                return invalid(format!(
                    "extent {} on axis {i} is not a multiple of h = {h}",
                    hi[i] - lo[i]
                ));
            }
            if r < 4.0 {
                return invalid(format!("box needs at least 5 nodes per axis, axis {i} has {}", r + 1.0));
            }
            dims.push(r as usize + 1);
        }
        Ok(Self { lo: lo.to_vec(), dims, h })
    }

    /// Centered box `[-L, L]ⁿ`.
    pub fn centered(n: usize, half_width: f64, h: f64) -> Result<Self> {
        Self::new(&vec![-half_width; n], &vec![half_width; n], h)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self, axis: usize) -> f64 {
        self.lo[axis] + (self.dims[axis] - 1) as f64 * self.h
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, idx: &MultiIndex) -> usize {
        row_major_index(&self.dims, idx)
    }

    pub fn multi_index(&self, flat: usize) -> MultiIndex {
        row_major_multi(&self.dims, flat)
    }

    /// Flat index of `flat + offset` if it stays on the lattice.
    pub fn shifted(&self, flat: usize, offset: &[i64]) -> Option<usize> {
        let mut idx = self.multi_index(flat);
        for axis in 0..self.dim() {
            let k = idx[axis] + offset[axis];
            if k < 0 || k >= self.dims[axis] as i64 {
                return None;
            }
            idx[axis] = k;
        }
        Some(self.index(&idx))
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        (0..self.dim()).map(|i| self.lo[i] + idx[i] as f64 * self.h).collect()
    }

    /// Node located exactly at `x`, if any.
    pub fn node_at(&self, x: &[f64]) -> Option<usize> {
        let mut idx = [0i64; MAX_DIM];
        for axis in 0..self.dim() {
            let t = (x[axis] - self.lo[axis]) / self.h;
            let r = t.round();
            if (t - r).abs() > SNAP_TOL * t.abs().max(1.0) || r < 0.0 || r >= self.dims[axis] as f64 {
                return None;
            }
            idx[axis] = r as i64;
        }
        Some(self.index(&idx))
    }

    /// Whether the node lies on the outer face of the box.
    pub fn is_edge(&self, flat: usize) -> bool {
        let idx = self.multi_index(flat);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] == self.dims[a] as i64 - 1)
    }

    /// Whether the node lies in the closed box `[-r, r]ⁿ` (sup-norm ball).
    pub fn in_centered_box(&self, flat: usize, r: f64) -> bool {
        let x = self.coord(flat);
        x.iter().all(|xi| xi.abs() <= r + SNAP_TOL * self.h)
    }

    /// Whether `x` lies in the closed hull of the lattice.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        let tol = SNAP_TOL * self.h;
        (0..self.dim()).all(|a| x[a] >= self.lo[a] - tol && x[a] <= self.hi(a) + tol)
    }
}

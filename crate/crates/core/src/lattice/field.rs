use serde::{Deserialize, Serialize};

use super::{BoxLattice, TorusLattice};
use crate::error::{invalid, MaError, Result};

/// Where a periodic field came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Raw,
    Mollified { eps: f64 },
    Normalized,
}

/// Scalar data on a torus lattice (houses `f`, `f_ε`, `f̃_ε` and `v`).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicField {
    lattice: TorusLattice,
    values: Vec<f64>,
    provenance: Provenance,
}

impl PeriodicField {
    pub fn new(lattice: TorusLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return invalid(format!(
                "field has {} values for {} nodes",
                values.len(),
                lattice.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("periodic field has non-finite values");
        }
        Ok(Self { lattice, values, provenance: Provenance::Raw })
    }

    pub fn from_fn(lattice: TorusLattice, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..lattice.len()).map(|i| f(&lattice.coord(i))).collect();
        Self::new(lattice, values)
    }

    pub fn constant(lattice: TorusLattice, c: f64) -> Result<Self> {
        let n = lattice.len();
        Self::new(lattice, vec![c; n])
    }

    pub fn zeros(lattice: TorusLattice) -> Self {
        let n = lattice.len();
        Self { lattice, values: vec![0.0; n], provenance: Provenance::Raw }
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn lattice(&self) -> &TorusLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// `cell_average`: arithmetic mean of node values, i.e. the periodic
    /// trapezoid rule for `⨍ f` over one cell. Summed in flat index order.
    pub fn cell_average(&self) -> f64 {
        let mut s = 0.0;
        for v in &self.values {
            s += v;
        }
        s / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Value at a physical point that lands on a lattice node modulo the periods.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.lattice.node_at(x).map(|i| self.values[i])
    }

    /// Same field plus a constant.
    pub fn shifted_by(&self, c: f64) -> Self {
        Self {
            lattice: self.lattice.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            provenance: self.provenance,
        }
    }

    /// Checks the right-hand-side invariant `0 < min ≤ max < ∞`.
    pub fn require_positive(&self) -> Result<ProblemBounds> {
        ProblemBounds::new(self.min(), self.max())
    }
}

/// `λ = inf f`, `Λ = sup f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemBounds {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

impl ProblemBounds {
    pub fn new(lambda_lo: f64, lambda_hi: f64) -> Result<Self> {
        if !(lambda_lo > 0.0 && lambda_lo <= lambda_hi && lambda_hi.is_finite()) {
            return Err(MaError::InvalidArgument(format!(
                "right-hand side must satisfy 0 < inf <= sup < inf, got [{lambda_lo}, {lambda_hi}]"
            )));
        }
        Ok(Self { lambda_lo, lambda_hi })
    }
}

/// Scalar data on a box lattice with an optional activity mask.
///
/// Masked nodes hold `NaN`; `mask[i] == true` means node `i` is active.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    lattice: BoxLattice,
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl ScalarField {
    pub fn new(lattice: BoxLattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != lattice.len() {
            return invalid(format!(
                "field has {} values for {} nodes",
                values.len(),
                lattice.len()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return invalid("scalar field has non-finite values on unmasked nodes");
        }
        Ok(Self { lattice, values, mask: None })
    }

    /// Builds a masked field; values on inactive nodes are replaced by `NaN`.
    pub fn with_mask(lattice: BoxLattice, mut values: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        if values.len() != lattice.len() || mask.len() != lattice.len() {
            return invalid("values and mask must match the lattice size");
        }
        for (v, &m) in values.iter_mut().zip(&mask) {
            if m {
                if !v.is_finite() {
                    return invalid("scalar field has non-finite values on unmasked nodes");
                }
            } else {
                *v = f64::NAN;
            }
        }
        let mask = if mask.iter().all(|&m| m) { None } else { Some(mask) };
        Ok(Self { lattice, values, mask })
    }

    /// Field from possibly non-finite values: non-finite entries become masked.
    pub fn from_partial(lattice: BoxLattice, values: Vec<f64>) -> Result<Self> {
        let mask = values.iter().map(|v| v.is_finite()).collect();
        Self::with_mask(lattice, values, mask)
    }

    pub fn from_fn(lattice: BoxLattice, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..lattice.len()).map(|i| f(&lattice.coord(i))).collect();
        Self::new(lattice, values)
    }

    pub fn lattice(&self) -> &BoxLattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    #[inline]
    pub fn is_active(&self, i: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[i])
    }

    /// Value at node `i` if it is active.
    #[inline]
    pub fn get(&self, i: usize) -> Option<f64> {
        if self.is_active(i) {
            Some(self.values[i])
        } else {
            None
        }
    }

    pub fn active_count(&self) -> usize {
        (0..self.values.len()).filter(|&i| self.is_active(i)).count()
    }

    /// Value at a point that is exactly a lattice node.
    pub fn value_at(&self, x: &[f64]) -> Option<f64> {
        self.lattice.node_at(x).and_then(|i| self.get(i))
    }

    /// Applies `op` to every active value.
    pub fn map(&self, op: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let values = (0..self.values.len())
            .map(|i| if self.is_active(i) { op(&self.lattice.coord(i), self.values[i]) } else { f64::NAN })
            .collect();
        Self::from_partial(self.lattice.clone(), values)
    }

    /// Sup and inf of active values within the sup-norm box `[-r, r]ⁿ`.
    pub fn extrema_in_box(&self, r: f64) -> Option<(f64, f64)> {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        let mut any = false;
        for i in 0..self.values.len() {
            if self.is_active(i) && self.lattice.in_centered_box(i, r) {
                any = true;
                hi = hi.max(self.values[i]);
                lo = lo.min(self.values[i]);
            }
        }
        any.then_some((hi, lo))
    }
}

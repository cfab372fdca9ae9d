//! Thin wrapper over faer's sparse LU for the Newton and Poisson systems.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};

use crate::error::{MaError, Result};

/// Square sparse system assembled from (row, col, value) triplets; duplicates are summed.
#[derive(Debug, Default, Clone)]
pub(crate) struct TripletMatrix {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl TripletMatrix {
    #[cfg(test)]
    pub(crate) fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub(crate) fn with_capacity(n: usize, nnz: usize) -> Self {
        Self { n, entries: Vec::with_capacity(nnz) }
    }

    #[inline]
    pub(crate) fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push(Triplet::new(row, col, value));
        }
    }

    /// Solves `M x = rhs` by sparse LU.
    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| MaError::Domain(format!("sparse assembly failed: {e:?}")))?;
        let lu = mat
            .sp_lu()
            .map_err(|e| MaError::Domain(format!("sparse LU failed: {e:?}")))?;
        let b = faer::col::Col::from_fn(self.n, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(MaError::Domain("singular linear system".into()));
        }
        Ok(out)
    }
}

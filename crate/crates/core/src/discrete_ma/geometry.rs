//! Per-node arm layout of the wide stencil and the operator kernels built on it.
//!
//! Every equation row owns one arm pair per stencil direction. An arm ends
//! either at another lattice node or at a fixed boundary value (shortened
//! arms of the Dirichlet scheme); arm lengths are physical.

use super::stencil::StencilSet;
use crate::quadratic::QuadraticPart;
use crate::sparse::TripletMatrix;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum ArmEnd {
    Node(usize),
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Arm {
    pub end: ArmEnd,
    pub len: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    /// Lattice node of each equation row.
    pub rows: Vec<usize>,
    pub n_dirs: usize,
    /// `rows.len() * n_dirs` arm pairs `[plus, minus]`.
    pub arms: Vec<[Arm; 2]>,
    /// `eᵀAe` for each unit direction.
    pub quad: Vec<f64>,
    /// Physically orthogonal bases, in stencil order.
    pub bases: Vec<Vec<usize>>,
    pub floor: f64,
}

/// Result of evaluating the operator at one row.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RowValue {
    pub value: f64,
    pub basis: usize,
    pub floored: bool,
}

/// Physical displacement of an integer direction on an axis-scaled lattice.
pub(crate) fn displacement(dir: &[i64], spacings: &[f64]) -> Vec<f64> {
    spacings.iter().enumerate().map(|(a, h)| dir[a] as f64 * h).collect()
}

/// Bases whose physical displacements stay mutually orthogonal, plus `eᵀAe` per direction.
pub(crate) fn direction_data(stencil: &StencilSet, spacings: &[f64], a: &QuadraticPart) -> (Vec<f64>, Vec<Vec<usize>>) {
    let disp: Vec<Vec<f64>> = stencil.directions().iter().map(|d| displacement(d, spacings)).collect();
    let quad = disp.iter().map(|d| a.rayleigh(d)).collect();
    let bases = stencil
        .bases()
        .iter()
        .filter(|b| {
            b.iter().enumerate().all(|(i, &p)| {
                b[i + 1..].iter().all(|&q| {
                    let dot: f64 = disp[p].iter().zip(&disp[q]).map(|(x, y)| x * y).sum();
                    let scale = norm(&disp[p]) * norm(&disp[q]);
                    dot.abs() <= 1e-12 * scale
                })
            })
        })
        .cloned()
        .collect();
    (quad, bases)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl Geometry {
    #[inline]
    fn arm_value(arm: &Arm, u: &[f64]) -> f64 {
        match arm.end {
            ArmEnd::Node(j) => u[j],
            ArmEnd::Fixed(g) => g,
        }
    }

    /// Directional second difference (plus `eᵀAe`) at row `r` along direction `k`.
    #[inline]
    pub fn second(&self, r: usize, k: usize, u: &[f64]) -> f64 {
        let [p, m] = &self.arms[r * self.n_dirs + k];
        let c = u[self.rows[r]];
        let up = Self::arm_value(p, u);
        let um = Self::arm_value(m, u);
        if p.len == m.len {
            self.quad[k] + (up + um - 2.0 * c) / (p.len * p.len)
        } else {
            self.quad[k] + 2.0 / (p.len + m.len) * ((up - c) / p.len + (um - c) / m.len)
        }
    }

    /// `min_b ∏_{k∈b} max(δ²_k, floor)`; ties keep the earliest basis.
    pub fn eval_row(&self, r: usize, u: &[f64], scratch: &mut Vec<f64>) -> RowValue {
        scratch.clear();
        scratch.extend((0..self.n_dirs).map(|k| self.second(r, k, u)));
        let mut best = RowValue { value: f64::INFINITY, basis: 0, floored: false };
        for (bi, basis) in self.bases.iter().enumerate() {
            let mut prod = 1.0;
            let mut floored = false;
            for &k in basis {
                let d = scratch[k];
                if d <= self.floor {
                    floored = true;
                    prod *= self.floor;
                } else {
                    prod *= d;
                }
            }
            if prod < best.value {
                best = RowValue { value: prod, basis: bi, floored };
            }
        }
        best
    }

    pub fn eval(&self, u: &[f64]) -> Vec<RowValue> {
        let mut scratch = Vec::with_capacity(self.n_dirs);
        (0..self.rows.len()).map(|r| self.eval_row(r, u, &mut scratch)).collect()
    }

    /// Cofactor-like weights `∂(∏ factors)/∂factor_j` of the active basis;
    /// zero along floored directions.
    pub fn weights(&self, r: usize, basis: usize, u: &[f64]) -> Vec<f64> {
        let b = &self.bases[basis];
        let factors: Vec<(f64, bool)> = b
            .iter()
            .map(|&k| {
                let d = self.second(r, k, u);
                if d <= self.floor {
                    (self.floor, true)
                } else {
                    (d, false)
                }
            })
            .collect();
        (0..b.len())
            .map(|j| {
                if factors[j].1 {
                    0.0
                } else {
                    factors.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, f)| f.0).product()
                }
            })
            .collect()
    }

    /// Sparse derivative of row `r` with respect to lattice node values,
    /// given the active basis and its weights. Entries for fixed arms are dropped.
    pub fn row_derivative(&self, r: usize, basis: usize, weights: &[f64], out: &mut Vec<(usize, f64)>) {
        out.clear();
        let center = self.rows[r];
        let mut diag = 0.0;
        for (j, &k) in self.bases[basis].iter().enumerate() {
            let w = weights[j];
            if w == 0.0 {
                continue;
            }
            let [p, m] = &self.arms[r * self.n_dirs + k];
            let s = p.len + m.len;
            let cp = 2.0 / (p.len * s);
            let cm = 2.0 / (m.len * s);
            diag -= w * (cp + cm);
            if let ArmEnd::Node(q) = p.end {
                out.push((q, w * cp));
            }
            if let ArmEnd::Node(q) = m.end {
                out.push((q, w * cm));
            }
        }
        out.push((center, diag));
    }

    /// Weights used by Newton: floored factors count as unit scale instead of
    /// the floor, so that every direction of the active basis keeps a positive
    /// weight and the step can lift non-convex second differences.
    pub fn newton_weights(&self, r: usize, basis: usize, u: &[f64]) -> Vec<f64> {
        let factors: Vec<f64> = self.bases[basis]
            .iter()
            .map(|&k| {
                let d = self.second(r, k, u);
                if d <= self.floor { 1.0 } else { d }
            })
            .collect();
        (0..factors.len())
            .map(|j| factors.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, f)| f).product())
            .collect()
    }

    /// Assembles the Newton Jacobian rows into `mat`, mapping lattice nodes to
    /// unknown columns through `column_of`.
    pub fn assemble_jacobian(
        &self,
        u: &[f64],
        values: &[RowValue],
        column_of: &[Option<usize>],
        row_offset: usize,
        mat: &mut TripletMatrix,
    ) {
        let mut entries = Vec::new();
        for (r, val) in values.iter().enumerate() {
            let w = if val.floored { self.newton_weights(r, val.basis, u) } else { self.weights(r, val.basis, u) };
            self.row_derivative(r, val.basis, &w, &mut entries);
            for &(node, v) in &entries {
                if let Some(c) = column_of[node] {
                    mat.push(row_offset + r, c, v);
                }
            }
        }
    }
}

use super::PeriodicProblem;
use crate::discrete_ma::{StencilSet, FACTOR_FLOOR_REL};
use crate::error::{invalid, Result};
use crate::lattice::PeriodicField;

/// `MA_h[v] − f − σ` evaluated node by node straight from the lattice, without
/// the solver's arm tables.
pub fn residual(problem: &PeriodicProblem, v: &PeriodicField, sigma: f64, width: usize) -> Result<PeriodicField> {
    let lat = problem.lattice();
    if v.lattice() != lat {
        return invalid("v and f live on different lattices");
    }
    let n = lat.dim();
    let stencil = StencilSet::new(n, width)?;
    let h = lat.spacings();
    let vals = v.values();
    let out = (0..lat.len())
        .map(|p| {
            let mut best = f64::INFINITY;
            for basis in stencil.bases() {
                let dirs: Vec<&[i64]> = basis.iter().map(|&k| &stencil.directions()[k][..n]).collect();
                let orthogonal = dirs.iter().enumerate().all(|(i, a)| {
                    dirs[i + 1..].iter().all(|b| (0..n).map(|t| a[t] as f64 * b[t] as f64 * h[t] * h[t]).sum::<f64>() == 0.0)
                });
                if !orthogonal {
                    continue;
                }
                let mut prod = 1.0;
                for d in dirs {
                    let disp: Vec<f64> = (0..n).map(|t| d[t] as f64 * h[t]).collect();
                    let len2: f64 = disp.iter().map(|x| x * x).sum();
                    let back: Vec<i64> = d.iter().map(|c| -c).collect();
                    let second = vals[lat.shifted(p, d)] + vals[lat.shifted(p, &back)] - 2.0 * vals[p];
                    let factor = problem.a.rayleigh(&disp) + second / len2;
                    prod *= factor.max(FACTOR_FLOOR_REL);
                }
                best = best.min(prod);
            }
            best - problem.f.values()[p] - sigma
        })
        .collect();
    PeriodicField::new(lat.clone(), out)
}

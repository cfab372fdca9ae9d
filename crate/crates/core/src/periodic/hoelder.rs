use rayon::prelude::*;

use crate::lattice::PeriodicField;

/// Node pairs are taken from at most this many sampled nodes.
pub const HOELDER_SAMPLE_CAP: usize = 4096;

/// `max |∇_h v(x) − ∇_h v(y)| / |x − y|^α` over node pairs, with torus distances
/// and central-difference gradients. Above [`HOELDER_SAMPLE_CAP`] nodes a fixed
/// stride subsample is used.
pub fn hoelder_quotient_periodic(v: &PeriodicField, alpha: f64) -> f64 {
    let lat = v.lattice();
    let n = lat.dim();
    let h = lat.spacings();
    let vals = v.values();
    let stride = lat.len().div_ceil(HOELDER_SAMPLE_CAP);
    let nodes: Vec<usize> = (0..lat.len()).step_by(stride).collect();
    let pts: Vec<(Vec<f64>, Vec<f64>)> = nodes
        .iter()
        .map(|&p| {
            let grad = (0..n)
                .map(|a| {
                    let mut e = [0i64; 3];
                    e[a] = 1;
                    let fwd = vals[lat.shifted(p, &e[..n])];
                    e[a] = -1;
                    let bwd = vals[lat.shifted(p, &e[..n])];
                    (fwd - bwd) / (2.0 * h[a])
                })
                .collect();
            (lat.coord(p), grad)
        })
        .collect();
    let periods = lat.periods();
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let (xi, gi) = &pts[i];
            let mut best = 0.0f64;
            for (xj, gj) in &pts[i + 1..] {
                let mut d2 = 0.0;
                let mut g2 = 0.0;
                for a in 0..n {
                    let mut d = (xi[a] - xj[a]).abs();
                    d = d.min(periods[a] - d);
                    d2 += d * d;
                    g2 += (gi[a] - gj[a]).powi(2);
                }
                best = best.max(g2.sqrt() / d2.sqrt().powf(alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

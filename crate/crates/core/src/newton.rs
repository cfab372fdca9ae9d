//! Damped Newton iteration shared by the periodic and Dirichlet solvers.

use log::debug;

use crate::error::{MaError, Result};
use crate::sparse::TripletMatrix;

pub(crate) trait NonlinearSystem {
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    fn jacobian(&self, x: &[f64]) -> TripletMatrix;
    /// Line-search trials failing this are treated like insufficient decrease.
    fn admissible(&self, _x: &[f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct NewtonSettings {
    /// Absolute ∞-norm target for the residual.
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_halvings: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual_inf: f64,
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn merit(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

pub(crate) fn solve<S: NonlinearSystem>(sys: &S, x0: Vec<f64>, s: &NewtonSettings) -> Result<NewtonOutcome> {
    let mut x = x0;
    let mut r = sys.residual(&x);
    let mut best = (inf_norm(&r), x.clone());
    for it in 0..=s.max_iter {
        let res_inf = inf_norm(&r);
        if res_inf < best.0 {
            best = (res_inf, x.clone());
        }
        debug!("newton iteration {it}: residual {res_inf:.3e}");
        if res_inf <= s.tol {
            return Ok(NewtonOutcome { x, iterations: it, residual_inf: res_inf });
        }
        if it == s.max_iter {
            break;
        }
        let jac = sys.jacobian(&x);
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = jac.solve(&neg)?;
        let phi0 = merit(&r);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=s.max_halvings {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            if !sys.admissible(&trial) {
                t *= 0.5;
                continue;
            }
            let rt = sys.residual(&trial);
            if merit(&rt) <= (1.0 - 2.0 * s.armijo * t) * phi0 {
                accepted = Some((trial, rt));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((xn, rn)) => {
                x = xn;
                r = rn;
            }
            None => {
                return Err(MaError::NonConvergence { iterations: it, best_residual: best.0, best_iterate: best.1 });
            }
        }
    }
    Err(MaError::NonConvergence { iterations: s.max_iter, best_residual: best.0, best_iterate: best.1 })
}

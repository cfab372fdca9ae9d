use log::info;
use serde::{Deserialize, Serialize};

use super::{build_report, compare_solutions, newton_solve, PeriodicProblem, SolveOptions, SolveReport};
use crate::error::{invalid, MaError, Result};
use crate::lattice::{mollify, normalize_rhs, MollifierSpec, PeriodicField, Provenance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub eps: f64,
    pub iterations: usize,
    pub residual_inf: f64,
    pub sigma: f64,
    /// Deviation from the final solution up to constants.
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub stages: Vec<StageRecord>,
    pub final_report: SolveReport,
}

impl ContinuationReport {
    /// Whether the stage deviations are nonincreasing, allowing `slack` for roundoff.
    pub fn deviations_nonincreasing(&self, slack: f64) -> bool {
        self.stages.windows(2).all(|w| w[1].deviation <= w[0].deviation + slack)
    }
}

/// Solves with mollified, renormalized data along a decreasing ε schedule,
/// warm-starting each stage; the last stage uses the raw `f`.
pub fn mollified_continuation(
    problem: &PeriodicProblem,
    schedule: &[f64],
    options: &SolveOptions,
) -> Result<(PeriodicField, ContinuationReport)> {
    if schedule.is_empty() {
        return invalid("continuation schedule is empty");
    }
    if schedule.windows(2).any(|w| w[1] >= w[0]) {
        return invalid("continuation schedule must be strictly decreasing");
    }
    let defect = super::check_compatibility(&problem.a, &problem.f);
    if defect > super::COMPATIBILITY_LIMIT {
        return Err(MaError::Infeasible { defect, limit: super::COMPATIBILITY_LIMIT });
    }
    let n = problem.f.values().len();
    let mut x = match &options.initial_guess {
        Some(g) if g.len() == n => g.clone(),
        Some(_) => return invalid("initial guess has the wrong length"),
        None => vec![0.0; n],
    };
    x.push(0.0);
    let det_a = problem.a.det();
    let mut stage_solutions = Vec::new();
    let mut stages = Vec::new();
    for &eps in schedule {
        let f_eps = mollify(&problem.f, &MollifierSpec::new(eps))?;
        let f_tilde = normalize_rhs(&f_eps, det_a)?.with_provenance(Provenance::Normalized);
        let stage = PeriodicProblem::new(problem.a.clone(), f_tilde)?;
        let (v, sigma, iterations, residual_inf) = newton_solve(&stage, options, x)?;
        info!("continuation stage eps = {eps:.4e}: {iterations} iterations");
        stages.push(StageRecord { eps, iterations, residual_inf, sigma, deviation: 0.0 });
        x = v.clone();
        x.push(sigma);
        stage_solutions.push(PeriodicField::new(problem.lattice().clone(), v)?);
    }
    let (v, sigma, iterations, _) = newton_solve(problem, options, x)?;
    let v = PeriodicField::new(problem.lattice().clone(), v)?;
    for (rec, sol) in stages.iter_mut().zip(&stage_solutions) {
        rec.deviation = compare_solutions(sol, &v)?;
    }
    let final_report = build_report(problem, options, &v, sigma, iterations)?;
    Ok((v, ContinuationReport { stages, final_report }))
}

use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use super::config::{sha256_hex, RunConfig};
use super::inputs::{self, InputFile};
use crate::dirichlet::{solve_dirichlet, BoundaryData, DirichletProblem, RhsSource};
use crate::error::{MaError, Result};
use crate::lattice::grid_io::{self, GridData};
use crate::lattice::{PeriodicField, ScalarField};
use crate::periodic::{
    check_compatibility, compare_solutions, mollified_continuation, solve_periodic, PeriodicProblem, SolveReport,
    StageRecord, COMPATIBILITY_LIMIT,
};
use crate::problems;
use crate::structure::{analyze, quotient_table_csv, EntireSample, StructureReport};
use crate::verify::{self, VerifyReport};

/// A file written by a command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

/// Fields shared by every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunHeader {
    pub command: String,
    pub config_digest: String,
    pub inputs: Vec<InputFile>,
}

struct Outputs {
    dir: PathBuf,
    written: Vec<OutputFile>,
}

impl Outputs {
    fn create(cfg: &RunConfig) -> Result<Self> {
        let dir = PathBuf::from(cfg.raw("out").unwrap_or("out"));
        std::fs::create_dir_all(&dir)?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), text)?;
        self.written.push(OutputFile { file: name.into(), sha256: sha256_hex(text.as_bytes()) });
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).map_err(|e| MaError::InvalidArgument(e.to_string()))? + "\n";
        std::fs::write(self.dir.join(name), text)?;
        Ok(())
    }
}

fn header(cfg: &RunConfig, command: &str, inputs: Vec<InputFile>) -> Result<RunHeader> {
    if let Some(c) = cfg.raw("command") {
        if c != command {
            return cfg.error("command", format!("config is for `{c}` but `{command}` was invoked"));
        }
    }
    Ok(RunHeader { command: command.into(), config_digest: cfg.digest(), inputs })
}

#[derive(Debug, Clone, Serialize)]
struct PeriodicRun {
    #[serde(flatten)]
    header: RunHeader,
    outputs: Vec<OutputFile>,
    dim: usize,
    resolution: Vec<usize>,
    a_matrix: Vec<f64>,
    compatibility_defect: f64,
    sigma: f64,
    solve: SolveReport,
    continuation: Option<Vec<StageRecord>>,
    /// `‖v − closed form‖∞` up to constants, for `cosine-1d` with `A = I`.
    closed_form_error: Option<f64>,
}

/// `solve-periodic`: writes `v.ma-grid` and `report.json`.
pub fn cmd_solve_periodic(cfg: &RunConfig) -> Result<i32> {
    let mut consumed = Vec::new();
    let f = inputs::periodic_rhs(cfg, &mut consumed)?;
    let n = f.lattice().dim();
    let qp = inputs::quadratic(cfg, n, Some(f.cell_average()))?;
    let head = header(cfg, "solve-periodic", consumed)?;
    let defect = check_compatibility(&qp, &f);
    if defect > COMPATIBILITY_LIMIT {
        return Err(MaError::Infeasible { defect, limit: COMPATIBILITY_LIMIT });
    }
    let options = inputs::solve_options(cfg)?;
    let schedule = cfg.list::<f64>("continuation", &[])?;
    let problem = PeriodicProblem::new(qp.clone(), f.clone())?;
    let (v, sigma, report, stages) = if schedule.is_empty() {
        let (v, sigma, report) = solve_periodic(&problem, &options)?;
        (v, sigma, report, None)
    } else {
        let (v, rep) = mollified_continuation(&problem, &schedule, &options)?;
        let sigma = rep.final_report.sigma;
        (v, sigma, rep.final_report, Some(rep.stages))
    };
    info!("periodic solve finished in {} iterations", report.iterations);
    let identity = qp.a_row_major().iter().enumerate().all(|(i, &x)| x == if i % (n + 1) == 0 { 1.0 } else { 0.0 });
    let closed_form_error = match inputs::cosine_amplitude(cfg) {
        Some(amp) if identity && f.lattice().periods()[0] == 1.0 => {
            let exact = PeriodicField::from_fn(f.lattice().clone(), |x| problems::cosine_profile(x[0], amp))?;
            Some(compare_solutions(&v, &exact)?)
        }
        _ => None,
    };
    let mut out = Outputs::create(cfg)?;
    out.write("v.ma-grid", &grid_io::periodic_to_string(&v))?;
    let run = PeriodicRun {
        header: head,
        outputs: out.written.clone(),
        dim: n,
        resolution: f.lattice().dims().to_vec(),
        a_matrix: qp.a_row_major(),
        compatibility_defect: defect,
        sigma,
        solve: report,
        continuation: stages,
        closed_form_error,
    };
    out.write_json("report.json", &run)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct DirichletRun {
    #[serde(flatten)]
    header: RunHeader,
    outputs: Vec<OutputFile>,
    h: f64,
    active_nodes: usize,
    solve: SolveReport,
    /// `max |u − g|` when `f ≡ det A` and `g` is the quadratic itself.
    quadratic_error: Option<f64>,
    /// `max |u − ¼|x|⁴|` for the radial oracle.
    radial_error: Option<f64>,
}

fn max_error(u: &ScalarField, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let lat = u.lattice();
    (0..lat.len()).filter_map(|i| u.get(i).map(|v| (v - exact(&lat.coord(i))).abs())).fold(0.0, f64::max)
}

/// `solve-dirichlet`: writes `u.ma-grid`, `report.json`, and `radial-errors.csv`
/// for the radial oracle.
pub fn cmd_solve_dirichlet(cfg: &RunConfig) -> Result<i32> {
    let mut consumed = Vec::new();
    let domain = inputs::domain(cfg, &mut consumed)?;
    let n = domain.dim();
    let rhs = inputs::dirichlet_rhs(cfg, &mut consumed)?;
    let g = inputs::boundary(cfg, n)?;
    let head = header(cfg, "solve-dirichlet", consumed)?;
    let h: f64 = cfg.get("h", 0.0625)?;
    let options = inputs::solve_options(cfg)?;
    let radial = inputs::is_radial(cfg, "f") && inputs::is_radial(cfg, "g");
    let quad_exact = match (&rhs, &g) {
        (RhsSource::Constant(c), BoundaryData::Quadratic(q)) if (c - q.det()).abs() <= 1e-14 * q.det() => Some(q.clone()),
        _ => None,
    };
    let problem = DirichletProblem::new(domain.clone(), h, rhs.clone(), g.clone())?;
    let (u, report) = solve_dirichlet(&problem, &options)?;
    let mut out = Outputs::create(cfg)?;
    out.write("u.ma-grid", &grid_io::box_to_string(&u.field))?;
    if radial {
        let mut table = String::from("h,max_error,iterations\n");
        for hk in cfg.list::<f64>("h_list", &[h])? {
            let p = DirichletProblem::new(domain.clone(), hk, rhs.clone(), g.clone())?;
            let (uk, rk) = solve_dirichlet(&p, &options)?;
            table += &format!("{hk:e},{:e},{}\n", max_error(&uk.field, problems::radial_solution), rk.iterations);
        }
        out.write("radial-errors.csv", &table)?;
    }
    let run = DirichletRun {
        header: head,
        outputs: out.written.clone(),
        h,
        active_nodes: u.field.active_count(),
        quadratic_error: quad_exact.map(|q| max_error(&u.field, |x| q.eval(x))),
        radial_error: radial.then(|| max_error(&u.field, problems::radial_solution)),
        solve: report,
    };
    out.write_json("report.json", &run)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct AnalysisRun {
    #[serde(flatten)]
    header: RunHeader,
    outputs: Vec<OutputFile>,
    #[serde(flatten)]
    report: StructureReport,
}

/// `analyze`: writes `structure-report.json`, `quotient-table.csv`, `decay.csv`,
/// `scaling.csv` and `h-stats.csv`.
pub fn cmd_analyze(cfg: &RunConfig) -> Result<i32> {
    let mut consumed = Vec::new();
    if cfg.raw("sample").is_none() {
        return cfg.error("sample", "analyze needs a sample grid file");
    }
    let u = match inputs::read_grid(cfg, "sample", &mut consumed)? {
        GridData::Box(u) => u,
        GridData::Torus(_) => return cfg.error("sample", "sample grid must be a box grid"),
    };
    let f = inputs::periodic_rhs(cfg, &mut consumed)?;
    let head = header(cfg, "analyze", consumed)?;
    let sample = EntireSample::new(u, inputs::provenance(cfg)?, f)?;
    let report = analyze(&sample, &inputs::analysis_options(cfg)?)?;
    let mut out = Outputs::create(cfg)?;
    out.write("quotient-table.csv", &quotient_table_csv(&report.quotient_table))?;
    let decay: String = report.decay.radii.iter().zip(&report.decay.sups).map(|(r, s)| format!("{r:e},{s:e}\n")).collect();
    out.write("decay.csv", &format!("r,sup_residual\n{decay}"))?;
    let scaling: String = report.scaling_errors.iter().map(|s| format!("{:e},{:e}\n", s.lambda, s.error)).collect();
    out.write("scaling.csv", &format!("lambda,error\n{scaling}"))?;
    let hs: String =
        report.h_stats.iter().map(|b| format!("{:e},{:e},{:e},{:e}\n", b.r, b.sup, b.inf, b.spread)).collect();
    out.write("h-stats.csv", &format!("r,sup,inf,spread\n{hs}"))?;
    let run = AnalysisRun { header: head, outputs: out.written.clone(), report };
    out.write_json("structure-report.json", &run)?;
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
struct VerifyRun {
    #[serde(flatten)]
    header: RunHeader,
    #[serde(flatten)]
    report: VerifyReport,
}

/// `verify`: runs the acceptance suite, prints the table and writes
/// `verify-report.json`; exit 0 iff every selected criterion passes.
pub fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let head = header(cfg, "verify", Vec::new())?;
    let seed: u64 = cfg.get("seed", 0)?;
    let filter = cfg.list::<usize>("criteria", &[])?;
    let report = verify::run(if filter.is_empty() { None } else { Some(&filter) }, seed)?;
    print!("{}", report.table());
    let mut out = Outputs::create(cfg)?;
    out.write("verify-table.txt", &report.table())?;
    let code = if report.all_passed() { 0 } else { 4 };
    out.write_json("verify-report.json", &VerifyRun { header: head, report })?;
    Ok(code)
}

/// Path of a report written into the configured output directory.
pub fn output_path(cfg: &RunConfig, name: &str) -> PathBuf {
    Path::new(cfg.raw("out").unwrap_or("out")).join(name)
}

//! Turning config values into problems: builtins, grid files, domains, options.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::{sha256_hex, RunConfig};
use crate::dirichlet::{BoundaryData, ConvexDomain, RhsSource};
use crate::error::Result;
use crate::lattice::grid_io::{self, GridData};
use crate::lattice::{PeriodicField, TorusLattice};
use crate::periodic::{AnchorMode, SolveOptions};
use crate::problems;
use crate::structure::{AnalysisOptions, SampleProvenance};
use crate::QuadraticPart;

/// A file consumed by a command, recorded in its report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputFile {
    pub key: String,
    pub path: String,
    pub sha256: String,
}

/// `name` or `name(a, b, …)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Call {
    pub name: String,
    pub args: Vec<f64>,
}

impl Call {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let (name, rest) = match text.find('(') {
            None => (text, None),
            Some(i) => (&text[..i], Some(text[i + 1..].strip_suffix(')')?)),
        };
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-') {
            return None;
        }
        let args = match rest {
            None => Vec::new(),
            Some(r) if r.trim().is_empty() => Vec::new(),
            Some(r) => r.split(',').map(|s| s.trim().parse::<f64>().ok()).collect::<Option<Vec<_>>>()?,
        };
        Some(Self { name: name.to_string(), args })
    }

    fn arg(&self, i: usize, default: f64) -> f64 {
        self.args.get(i).copied().unwrap_or(default)
    }
}

/// Reads a grid file named by `key`, recording its checksum.
pub fn read_grid(cfg: &RunConfig, key: &str, inputs: &mut Vec<InputFile>) -> Result<GridData> {
    let raw = cfg.raw(key).unwrap_or_default().to_string();
    let path = cfg.resolve(&raw);
    if !path.exists() {
        return cfg.error(key, format!("file `{raw}` does not exist"));
    }
    let bytes = std::fs::read(&path)?;
    inputs.push(InputFile { key: key.into(), path: raw, sha256: sha256_hex(&bytes) });
    grid_io::parse(&String::from_utf8_lossy(&bytes))
}

fn looks_like_path(v: &str) -> bool {
    v.ends_with(".ma-grid") || v.ends_with(".csv") || v.contains('/')
}

pub fn torus(cfg: &RunConfig) -> Result<TorusLattice> {
    let n: usize = cfg.get("dim", 2)?;
    let periods = cfg.list::<f64>("periods", &vec![1.0; n])?;
    let mut res = cfg.list::<usize>("resolution", &[64])?;
    if res.len() == 1 {
        res = vec![res[0]; n];
    }
    if periods.len() != n || res.len() != n {
        return cfg.error("periods", format!("periods and resolution must list {n} values"));
    }
    TorusLattice::new(&periods, &res)
}

/// The periodic right-hand side named by `f`.
pub fn periodic_rhs(cfg: &RunConfig, inputs: &mut Vec<InputFile>) -> Result<PeriodicField> {
    let spec = cfg.raw("f").unwrap_or("constant(1)");
    if looks_like_path(spec) {
        return match read_grid(cfg, "f", inputs)? {
            GridData::Torus(f) => Ok(f),
            GridData::Box(_) => cfg.error("f", "right-hand side grid must be periodic"),
        };
    }
    let Some(call) = Call::parse(spec) else {
        return cfg.error("f", format!("cannot parse `{spec}`"));
    };
    let lat = torus(cfg)?;
    let seed: u64 = cfg.get("seed", 0)?;
    let wrap = |r: Result<PeriodicField>| r.or_else(|e| cfg.error("f", e.to_string()));
    match call.name.as_str() {
        "constant" => {
            let c = call.arg(0, 1.0);
            if !(c > 0.0) {
                return cfg.error("f", "constant must be positive");
            }
            wrap(problems::constant(lat, c))
        }
        "cosine-1d" => wrap(problems::cosine_1d(lat, call.arg(0, 0.5))),
        "separable" => wrap(problems::separable(lat, call.arg(0, 0.5))),
        "checkerboard" => wrap(problems::checkerboard(lat, call.arg(0, 1.5), call.arg(1, 0.5))),
        "seeded-noise" => {
            let s = call.args.first().map_or(seed, |v| *v as u64);
            wrap(problems::seeded_noise(lat, s, call.arg(1, 0.5), call.arg(2, 1.5)))
        }
        other => cfg.error("f", format!("unknown builtin `{other}`")),
    }
}

/// Amplitude of a `cosine-1d` builtin, if that is what `f` names.
pub fn cosine_amplitude(cfg: &RunConfig) -> Option<f64> {
    let call = Call::parse(cfg.raw("f")?)?;
    (call.name == "cosine-1d").then(|| call.arg(0, 0.5))
}

/// `½xᵀAx + b·x + c` from `a`, `b`, `c`; `a = auto` scales the identity to `det A = mean`.
pub fn quadratic(cfg: &RunConfig, n: usize, mean: Option<f64>) -> Result<QuadraticPart> {
    let a = match cfg.raw("a").unwrap_or("identity") {
        "identity" => DMatrix::identity(n, n),
        "auto" => match mean {
            Some(m) if m > 0.0 => DMatrix::identity(n, n) * m.powf(1.0 / n as f64),
            _ => return cfg.error("a", "`auto` needs a periodic right-hand side"),
        },
        _ => {
            let v = cfg.list::<f64>("a", &[])?;
            if v.len() != n * n {
                return cfg.error("a", format!("expected {} row-major entries", n * n));
            }
            DMatrix::from_row_slice(n, n, &v)
        }
    };
    let b = cfg.list::<f64>("b", &vec![0.0; n])?;
    if b.len() != n {
        return cfg.error("b", format!("expected {n} entries"));
    }
    let c = cfg.get("c", 0.0)?;
    QuadraticPart::new(a, DVector::from_vec(b), c).or_else(|e| cfg.error("a", e.to_string()))
}

pub fn solve_options(cfg: &RunConfig) -> Result<SolveOptions> {
    let d = SolveOptions::default();
    let anchor = match cfg.raw("anchor") {
        None | Some("mean-zero") => AnchorMode::MeanZero,
        Some(spec) => match Call::parse(spec) {
            Some(c) if c.name == "origin" && c.args.len() <= 1 => AnchorMode::ValueAtOrigin(c.arg(0, 0.0)),
            _ => return cfg.error("anchor", format!("expected mean-zero or origin(value), found `{spec}`")),
        },
    };
    Ok(SolveOptions {
        tol_residual: cfg.get("tol", d.tol_residual)?,
        max_newton: cfg.get("max_newton", d.max_newton)?,
        armijo: cfg.get("armijo", d.armijo)?,
        max_halvings: cfg.get("max_halvings", d.max_halvings)?,
        anchor,
        width: cfg.get("width", d.width)?,
        initial_guess: None,
        continuation_fallback: cfg.flag("continuation_fallback", d.continuation_fallback)?,
    })
}

/// Builtin `interval(lo, hi)`, `rectangle(x0, y0, x1, y1)`,
/// `regular-polygon(cx, cy, r, k)`, or a vertex CSV file.
pub fn domain(cfg: &RunConfig, inputs: &mut Vec<InputFile>) -> Result<ConvexDomain> {
    let Some(spec) = cfg.raw("domain") else {
        return cfg.error("domain", "missing");
    };
    if looks_like_path(spec) {
        let path = cfg.resolve(spec);
        if !path.exists() {
            return cfg.error("domain", format!("file `{spec}` does not exist"));
        }
        let bytes = std::fs::read(&path)?;
        inputs.push(InputFile { key: "domain".into(), path: spec.into(), sha256: sha256_hex(&bytes) });
        return ConvexDomain::from_csv(&String::from_utf8_lossy(&bytes));
    }
    let wrap = |r: Result<ConvexDomain>| r.or_else(|e| cfg.error("domain", e.to_string()));
    match Call::parse(spec) {
        Some(c) if c.name == "interval" && c.args.len() == 2 => wrap(ConvexDomain::interval(c.args[0], c.args[1])),
        Some(c) if c.name == "rectangle" && c.args.len() == 4 => {
            wrap(ConvexDomain::rectangle([c.args[0], c.args[1]], [c.args[2], c.args[3]]))
        }
        Some(c) if c.name == "regular-polygon" && c.args.len() == 4 && c.args[3].fract() == 0.0 && c.args[3] >= 3.0 => {
            wrap(ConvexDomain::regular_polygon([c.args[0], c.args[1]], c.args[2], c.args[3] as usize, 0.0))
        }
        _ => cfg.error("domain", format!("cannot parse `{spec}`")),
    }
}

/// Dirichlet right-hand side: `constant(c)`, `radial`, or any periodic source.
pub fn dirichlet_rhs(cfg: &RunConfig, inputs: &mut Vec<InputFile>) -> Result<RhsSource> {
    let spec = cfg.raw("f").unwrap_or("constant(1)");
    match Call::parse(spec) {
        Some(c) if c.name == "constant" => {
            let v = c.arg(0, 1.0);
            if !(v >= 0.0) {
                return cfg.error("f", "constant must be nonnegative");
            }
            Ok(RhsSource::Constant(v))
        }
        Some(c) if c.name == "radial" => Ok(RhsSource::Function(Arc::new(problems::radial_rhs))),
        _ => Ok(RhsSource::Periodic(periodic_rhs(cfg, inputs)?)),
    }
}

/// Boundary data: `constant(c)`, `quadratic` (from `a`, `b`, `c`) or `radial`.
pub fn boundary(cfg: &RunConfig, n: usize) -> Result<BoundaryData> {
    let spec = cfg.raw("g").unwrap_or("constant(0)");
    match Call::parse(spec) {
        Some(c) if c.name == "constant" => Ok(BoundaryData::Constant(c.arg(0, 0.0))),
        Some(c) if c.name == "quadratic" && c.args.is_empty() => Ok(BoundaryData::Quadratic(quadratic(cfg, n, None)?)),
        Some(c) if c.name == "radial" && c.args.is_empty() => Ok(BoundaryData::Function(Arc::new(problems::radial_solution))),
        _ => cfg.error("g", format!("expected constant(c), quadratic or radial, found `{spec}`")),
    }
}

pub fn is_radial(cfg: &RunConfig, key: &str) -> bool {
    cfg.raw(key).and_then(Call::parse).is_some_and(|c| c.name == "radial")
}

pub fn provenance(cfg: &RunConfig) -> Result<SampleProvenance> {
    match cfg.raw("provenance").unwrap_or("dirichlet-reconstructed") {
        "synthesized" => Ok(SampleProvenance::Synthesized),
        "dirichlet-reconstructed" => Ok(SampleProvenance::DirichletReconstructed),
        other => cfg.error("provenance", format!("unknown provenance `{other}`")),
    }
}

pub fn analysis_options(cfg: &RunConfig) -> Result<AnalysisOptions> {
    let d = AnalysisOptions::default();
    Ok(AnalysisOptions {
        k: cfg.get("k", d.k)?,
        inner: cfg.get("inner", d.inner)?,
        lambdas: cfg.list("lambdas", &d.lambdas)?,
        target_h: cfg.get("target_h", d.target_h)?,
        radii: cfg.list("radii", &d.radii)?,
        boxes: cfg.list("boxes", &d.boxes)?,
        doubling_levels: cfg.get("doubling_levels", d.doubling_levels)?,
        solve: solve_options(cfg)?,
    })
}

use std::fmt;
use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::domain::ConvexDomain;
use crate::discrete_ma::geometry::{direction_data, displacement, norm, Arm, ArmEnd, Geometry};
use crate::discrete_ma::{ConvexGridFunction, StencilSet, DEFAULT_TOL_CONVEX, FACTOR_FLOOR_REL};
use crate::error::{invalid, Result};
use crate::lattice::{BoxLattice, PeriodicField, ScalarField, SNAP_TOL};
use crate::newton::{self, NonlinearSystem};
use crate::periodic::{SolveOptions, SolveReport};
use crate::quadratic::QuadraticPart;
use crate::sparse::TripletMatrix;

/// Nodes closer to the boundary than this fraction of `h` are treated as boundary nodes.
const BOUNDARY_BAND: f64 = 1e-3;

pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Boundary trace `g`.
#[derive(Clone)]
pub enum BoundaryData {
    Constant(f64),
    /// `½xᵀAx + b·x + c`.
    Quadratic(QuadraticPart),
    Function(PointFn),
}

impl BoundaryData {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Self::Constant(m) => *m,
            Self::Quadratic(q) => q.eval(x),
            Self::Function(g) => g(x),
        }
    }
}

impl fmt::Debug for BoundaryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(m) => write!(f, "Constant({m})"),
            Self::Quadratic(q) => write!(f, "Quadratic({q:?})"),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

/// Right-hand side sampled at interior nodes.
#[derive(Clone)]
pub enum RhsSource {
    Constant(f64),
    /// Periodic data; box nodes must coincide with torus nodes.
    Periodic(PeriodicField),
    Function(PointFn),
}

impl fmt::Debug for RhsSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::Periodic(p) => write!(f, "Periodic({:?})", p.lattice()),
            Self::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl RhsSource {
    fn sample(&self, x: &[f64]) -> Result<f64> {
        match self {
            Self::Constant(c) => Ok(*c),
            Self::Function(f) => Ok(f(x)),
            Self::Periodic(p) => p
                .value_at(x)
                .ok_or_else(|| crate::MaError::InvalidArgument(format!("box node {x:?} is not a torus node"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirichletProblem {
    pub domain: ConvexDomain,
    pub h: f64,
    pub f: RhsSource,
    pub g: BoundaryData,
}

impl DirichletProblem {
    pub fn new(domain: ConvexDomain, h: f64, f: RhsSource, g: BoundaryData) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return invalid(format!("spacing must be positive, got {h}"));
        }
        Ok(Self { domain, h, f, g })
    }

    /// Box lattice on multiples of `h` covering the domain.
    pub fn lattice(&self) -> Result<BoxLattice> {
        let (lo, hi) = self.domain.bounds();
        let snap = |x: f64, up: bool| {
            let t = x / self.h;
            let r = t.round();
            if (t - r).abs() <= SNAP_TOL * t.abs().max(1.0) {
                r * self.h
            } else if up {
                t.ceil() * self.h
            } else {
                t.floor() * self.h
            }
        };
        let lo: Vec<f64> = lo.iter().map(|x| snap(*x, false)).collect();
        let hi: Vec<f64> = hi.iter().map(|x| snap(*x, true)).collect();
        BoxLattice::new(&lo, &hi, self.h)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum NodeKind {
    Outside,
    Boundary,
    Interior,
}

/// Discretization of one Dirichlet problem: node classes, arm tables and data.
pub(crate) struct Discretization {
    pub lattice: BoxLattice,
    pub geom: Geometry,
    /// Column of each interior node.
    pub column_of: Vec<Option<usize>>,
    /// Full node vector with boundary values set, interior entries zero, outside `NaN`.
    pub template: Vec<f64>,
    pub f: Vec<f64>,
    pub active: Vec<bool>,
    /// Location and value of every fixed arm end.
    rim: Vec<(Vec<f64>, f64)>,
}

impl Discretization {
    pub fn build(problem: &DirichletProblem, width: usize) -> Result<Self> {
        let lattice = problem.lattice()?;
        let n = lattice.dim();
        if problem.domain.dim() != n {
            return invalid("domain dimension mismatch");
        }
        let h = lattice.spacing();
        let kinds: Vec<NodeKind> = (0..lattice.len())
            .map(|p| {
                let d = problem.domain.inner_distance(&lattice.coord(p));
                if d > BOUNDARY_BAND * h {
                    NodeKind::Interior
                } else if d >= -SNAP_TOL * h {
                    NodeKind::Boundary
                } else {
                    NodeKind::Outside
                }
            })
            .collect();
        let has_block = (0..lattice.len()).any(|p| {
            let mut ok = true;
            let mut off = [-2i64; 3];
            'outer: loop {
                match lattice.shifted(p, &off[..n]) {
                    Some(j) if kinds[j] == NodeKind::Interior => {}
                    _ => {
                        ok = false;
                        break;
                    }
                }
                let mut a = n;
                loop {
                    if a == 0 {
                        break 'outer;
                    }
                    a -= 1;
                    if off[a] < 2 {
                        off[a] += 1;
                        break;
                    }
                    off[a] = -2;
                }
            }
            ok
        });
        if !has_block {
            return invalid("domain is too small for the grid: no 5-node interior block");
        }
        let stencil = StencilSet::new(n, width)?;
        let spacings = vec![h; n];
        let (quad, bases) = direction_data(&stencil, &spacings, &QuadraticPart::zero(n));
        let mut template = vec![f64::NAN; lattice.len()];
        let mut column_of = vec![None; lattice.len()];
        let mut rows = Vec::new();
        let mut f = Vec::new();
        for p in 0..lattice.len() {
            let x = lattice.coord(p);
            match kinds[p] {
                NodeKind::Outside => {}
                NodeKind::Boundary => template[p] = problem.g.eval(&x),
                NodeKind::Interior => {
                    template[p] = 0.0;
                    column_of[p] = Some(rows.len());
                    rows.push(p);
                    f.push(problem.f.sample(&x)?);
                }
            }
        }
        if let Some(bad) = f.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return invalid(format!("right-hand side must be nonnegative at interior nodes, found {bad}"));
        }
        let dirs = stencil.directions();
        let mut arms = Vec::with_capacity(rows.len() * dirs.len());
        let mut rim = Vec::new();
        for &p in &rows {
            let x = lattice.coord(p);
            for d in dirs {
                let disp = displacement(&d[..n], &spacings);
                let full = norm(&disp);
                let mut pair = [Arm { end: ArmEnd::Fixed(0.0), len: full }; 2];
                for (s, sign) in [1.0, -1.0].into_iter().enumerate() {
                    let dv: Vec<f64> = disp.iter().map(|c| sign * c).collect();
                    let t = problem.domain.ray_exit(&x, &dv);
                    let offset: Vec<i64> = d[..n].iter().map(|c| (sign as i64) * c).collect();
                    let target = lattice.shifted(p, &offset);
                    pair[s] = match target {
                        Some(j) if t >= 1.0 - SNAP_TOL && kinds[j] == NodeKind::Interior => {
                            Arm { end: ArmEnd::Node(j), len: full }
                        }
                        Some(j) if t >= 1.0 - SNAP_TOL && kinds[j] == NodeKind::Boundary => {
                            rim.push((lattice.coord(j), template[j]));
                            Arm { end: ArmEnd::Fixed(template[j]), len: full }
                        }
                        _ => {
                            let y: Vec<f64> = x.iter().zip(&dv).map(|(a, b)| a + t.min(1.0) * b).collect();
                            let g = problem.g.eval(&y);
                            rim.push((y, g));
                            Arm { end: ArmEnd::Fixed(g), len: t.min(1.0) * full }
                        }
                    };
                }
                arms.push(pair);
            }
        }
        let active = kinds.iter().map(|k| *k != NodeKind::Outside).collect();
        let geom = Geometry { rows, n_dirs: dirs.len(), arms, quad, bases, floor: FACTOR_FLOOR_REL };
        Ok(Self { lattice, geom, column_of, template, f, active, rim })
    }

    pub fn unknowns(&self) -> usize {
        self.geom.rows.len()
    }

    pub fn scatter(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.template.clone();
        for (r, &p) in self.geom.rows.iter().enumerate() {
            full[p] = x[r];
        }
        full
    }

    /// Paraboloid `½K|x − c|² + s` with `K = max f^{1/n}`, lowered until it sits
    /// below every fixed arm end, so all second differences are at least `K`.
    fn bowl_guess(&self) -> Vec<f64> {
        let n = self.lattice.dim();
        let m = self.unknowns();
        let coords: Vec<Vec<f64>> = self.geom.rows.iter().map(|&p| self.lattice.coord(p)).collect();
        let c: Vec<f64> = (0..n).map(|a| coords.iter().map(|x| x[a]).sum::<f64>() / m as f64).collect();
        let fmax = self.f.iter().fold(0.0f64, |a, b| a.max(*b));
        let k = if fmax > 0.0 { fmax.powf(1.0 / n as f64) } else { 1.0 };
        let bowl = |x: &[f64]| 0.5 * k * x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let s = self.rim.iter().map(|(y, g)| g - bowl(y)).fold(f64::INFINITY, f64::min);
        coords.iter().map(|x| bowl(x) + s).collect()
    }

    /// Poisson guess when it is already strictly convex, the bowl otherwise.
    fn initial_guess(&self) -> Result<Vec<f64>> {
        let x = self.poisson_guess()?;
        if self.geom.eval(&self.scatter(&x)).iter().any(|v| v.floored) {
            return Ok(self.bowl_guess());
        }
        Ok(x)
    }

    /// Solves the axis-direction Poisson problem `Σ δ²_{e_k} u = n f^{1/n}`.
    fn poisson_guess(&self) -> Result<Vec<f64>> {
        let n = self.lattice.dim() as f64;
        let m = self.unknowns();
        let zero = self.scatter(&vec![0.0; m]);
        let ones = vec![1.0; self.geom.bases[0].len()];
        let mut mat = TripletMatrix::with_capacity(m, m * 5);
        let mut rhs = Vec::with_capacity(m);
        let mut entries = Vec::new();
        for r in 0..m {
            self.geom.row_derivative(r, 0, &ones, &mut entries);
            for &(node, v) in &entries {
                if let Some(c) = self.column_of[node] {
                    mat.push(r, c, v);
                }
            }
            let offset: f64 = self.geom.bases[0].iter().map(|&k| self.geom.second(r, k, &zero)).sum();
            rhs.push(n * self.f[r].powf(1.0 / n) - offset);
        }
        mat.solve(&rhs)
    }
}

struct DirichletSystem<'a> {
    disc: &'a Discretization,
    /// Keep iterates free of floored rows once started that way.
    guard: bool,
}

impl NonlinearSystem for DirichletSystem<'_> {
    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let full = self.disc.scatter(x);
        self.disc.geom.eval(&full).iter().zip(&self.disc.f).map(|(r, f)| r.value - f).collect()
    }

    fn jacobian(&self, x: &[f64]) -> TripletMatrix {
        let full = self.disc.scatter(x);
        let values = self.disc.geom.eval(&full);
        let mut m = TripletMatrix::with_capacity(x.len(), x.len() * 9);
        self.disc.geom.assemble_jacobian(&full, &values, &self.disc.column_of, 0, &mut m);
        m
    }

    fn admissible(&self, x: &[f64]) -> bool {
        !self.guard || !self.disc.geom.eval(&self.disc.scatter(x)).iter().any(|v| v.floored)
    }
}

/// `max |∇_h u(x) − ∇_h u(y)| / |x − y|^α` over nodes with central differences
/// available, subsampled by a fixed stride above 4096 nodes.
pub fn hoelder_quotient_box(u: &ScalarField, alpha: f64) -> f64 {
    let lat = u.lattice();
    let n = lat.dim();
    let h = lat.spacing();
    let mut pts = Vec::new();
    for p in 0..lat.len() {
        let mut grad = Vec::with_capacity(n);
        for a in 0..n {
            let mut e = [0i64; 3];
            e[a] = 1;
            let fwd = lat.shifted(p, &e[..n]).and_then(|j| u.get(j));
            e[a] = -1;
            let bwd = lat.shifted(p, &e[..n]).and_then(|j| u.get(j));
            match (fwd, bwd) {
                (Some(f), Some(b)) => grad.push((f - b) / (2.0 * h)),
                _ => break,
            }
        }
        if grad.len() == n {
            pts.push((lat.coord(p), grad));
        }
    }
    let stride = pts.len().div_ceil(crate::periodic::HOELDER_SAMPLE_CAP).max(1);
    let pts: Vec<_> = pts.into_iter().step_by(stride).collect();
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let (xi, gi) = &pts[i];
            let mut best = 0.0f64;
            for (xj, gj) in &pts[i + 1..] {
                let d: f64 = xi.iter().zip(xj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let g: f64 = gi.iter().zip(gj).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                best = best.max(g / d.powf(alpha));
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// Solves `det D²u = f` in the domain with `u = g` on its boundary.
///
/// Only `tol_residual`, `max_newton`, `armijo`, `max_halvings`, `width` and a
/// full-lattice `initial_guess` are read from `options`.
pub fn solve_dirichlet(problem: &DirichletProblem, options: &SolveOptions) -> Result<(ConvexGridFunction, SolveReport)> {
    let disc = Discretization::build(problem, options.width)?;
    let m = disc.unknowns();
    let x0 = match &options.initial_guess {
        Some(g) if g.len() == disc.lattice.len() => disc.geom.rows.iter().map(|&p| g[p]).collect(),
        Some(g) => return invalid(format!("initial guess has {} values for {} nodes", g.len(), disc.lattice.len())),
        None => disc.initial_guess()?,
    };
    let fmax = disc.f.iter().fold(0.0f64, |a, b| a.max(*b));
    let settings = options.settings(fmax)?;
    let guard = !disc.geom.eval(&disc.scatter(&x0)).iter().any(|v| v.floored);
    let sys = DirichletSystem { disc: &disc, guard };
    let out = newton::solve(&sys, x0, &settings)?;
    info!("Dirichlet solve: {m} unknowns, {} Newton iterations", out.iterations);
    let full = disc.scatter(&out.x);
    let field = ScalarField::with_mask(disc.lattice.clone(), full.clone(), disc.active.clone())?;
    let stencil = StencilSet::new(disc.lattice.dim(), options.width)?;
    let u = ConvexGridFunction::certify(field, &stencil, DEFAULT_TOL_CONVEX)?;
    let values = disc.geom.eval(&full);
    let report = SolveReport {
        iterations: out.iterations,
        residual_inf: out.residual_inf,
        sigma: 0.0,
        floored_nodes: values.iter().filter(|v| v.floored).count(),
        convexity_defect: u.defect,
        hoelder_q25: hoelder_quotient_box(&u.field, 0.25),
        hoelder_q50: hoelder_quotient_box(&u.field, 0.5),
    };
    Ok((u, report))
}

/// Residual `MA_h[u] − f` at interior nodes of a solved field (`NaN` elsewhere).
pub fn dirichlet_residual(problem: &DirichletProblem, u: &ScalarField, width: usize) -> Result<ScalarField> {
    let disc = Discretization::build(problem, width)?;
    if u.lattice() != &disc.lattice {
        return invalid("field does not live on the problem lattice");
    }
    let x: Vec<f64> = disc.geom.rows.iter().map(|&p| u.values()[p]).collect();
    let full = disc.scatter(&x);
    let mut out = vec![f64::NAN; disc.lattice.len()];
    for (r, v) in disc.geom.eval(&full).iter().enumerate() {
        out[disc.geom.rows[r]] = v.value - disc.f[r];
    }
    ScalarField::from_partial(disc.lattice.clone(), out)
}

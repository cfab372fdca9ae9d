//! Acceptance suite: every criterion recomputed from the public API with its own
//! oracle, printed as one PASS/FAIL line. Exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::sync::Arc;
use std::time::{Duration, Instant};

use ma_core::cli::{cmd_solve_periodic, cmd_verify, RunConfig};
use ma_core::dirichlet::{solve_dirichlet, BoundaryData, ConvexDomain, DirichletProblem, RhsSource};
use ma_core::discrete_ma::{concavity_gap, linearize_periodic, ma_operator_periodic, subdifferential_measure, StencilSet};
use ma_core::lattice::{BoxLattice, PeriodicField, ScalarField, TorusLattice};
use ma_core::periodic::{compare_solutions, solve_periodic, AnchorMode, PeriodicProblem, SolveOptions};
use ma_core::structure::{
    doubling_trace, estimate_a, estimate_b, quotient_profile, reconstruct_entire, scaling_errors, synthesize_entire,
    EntireSample, LatticeDirectionSet,
};
use ma_core::{MaError, QuadraticPart};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), MaError>;

/// `v'' = ½cos(2πx)` with zero mean.
fn cosine_oracle(x: f64) -> f64 {
    -(2.0 * PI * x).cos() / (8.0 * PI * PI)
}

fn cosine_rhs(lat: TorusLattice) -> ma_core::Result<PeriodicField> {
    PeriodicField::from_fn(lat, |x| 1.0 + 0.5 * (2.0 * PI * x[0]).cos())
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn oracle_error(v: &PeriodicField) -> f64 {
    let lat = v.lattice();
    (0..lat.len()).map(|i| (v.values()[i] - cosine_oracle(lat.coord(i)[0])).abs()).fold(0.0, f64::max)
}

fn sci(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(",")
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let (ok, detail) = body()?;
    let elapsed = start.elapsed();
    match limit {
        Some(l) => Ok((ok && elapsed < l, format!("{detail} time={:.2}s (limit {}s)", elapsed.as_secs_f64(), l.as_secs()))),
        None => Ok((ok, detail)),
    }
}

fn flat_case() -> Outcome {
    let f = PeriodicField::constant(TorusLattice::unit(2, 64)?, 1.0)?;
    let (v, sigma, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(2), f)?, &SolveOptions::default())?;
    let sup = v.values().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok((sup <= 1e-10 && sigma == 0.0, format!("sup|v|={sup:.2e} sigma={sigma:.2e}")))
}

fn closed_form_1d() -> Outcome {
    let ns = [64.0, 128.0, 256.0];
    let mut errs = Vec::new();
    for &n in &ns {
        let f = cosine_rhs(TorusLattice::unit(1, n as usize)?)?;
        let (v, _, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(1), f)?, &SolveOptions::default())?;
        errs.push(oracle_error(&v));
    }
    let order = -least_squares_slope(&ns, &errs);
    Ok((errs[2] <= 1e-4 && order >= 1.5, format!("err256={:.2e} order={order:.3}", errs[2])))
}

fn separable_2d() -> Outcome {
    let mut errs = Vec::new();
    for n in [16, 32, 64] {
        let f = cosine_rhs(TorusLattice::unit(2, n)?)?;
        let (v, _, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(2), f)?, &SolveOptions::default())?;
        errs.push(oracle_error(&v));
    }
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    Ok((errs[2] <= 1e-2 && decreasing, format!("errors={}", sci(&errs))))
}

fn compatibility_gate() -> Outcome {
    let out = tempfile::tempdir().map_err(MaError::Io)?;
    let mut cfg = RunConfig::parse("f = constant(1.1)\nresolution = 16\n", out.path())?;
    cfg.set("out", out.path().join("run").to_string_lossy())?;
    let code = match cmd_solve_periodic(&cfg) {
        Err(e @ MaError::Infeasible { .. }) => ma_core::verify::exit_code(&e),
        Err(e) => return Err(e),
        Ok(c) => c,
    };
    let untouched = !out.path().join("run").join("v.ma-grid").exists();
    Ok((code == 2 && untouched, format!("exit={code} no_output={untouched}")))
}

fn uniqueness() -> Outcome {
    let n = 48;
    let lat = TorusLattice::unit(2, n)?;
    let f = PeriodicField::from_fn(lat, |x| {
        if ((2.0 * x[0]).floor() + (2.0 * x[1]).floor()) as i64 % 2 == 0 { 1.5 } else { 0.5 }
    })?;
    let p = PeriodicProblem::new(QuadraticPart::identity(2), f)?;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let h2 = 1.0 / (n * n) as f64;
    let guess: Vec<f64> = (0..n * n).map(|_| 0.05 * h2 * rng.random_range(-1.0..1.0)).collect();
    let (v1, _, _) = solve_periodic(&p, &SolveOptions::default())?;
    let opts = SolveOptions { anchor: AnchorMode::ValueAtOrigin(-2.0), initial_guess: Some(guess), ..Default::default() };
    let (v2, _, _) = solve_periodic(&p, &opts)?;
    let d: Vec<f64> = v1.values().iter().zip(v2.values()).map(|(a, b)| a - b).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    let own = d.iter().fold(0.0f64, |m, x| m.max((x - mean).abs()));
    let lib = compare_solutions(&v1, &v2)?;
    Ok((own <= 1e-8 && lib <= 1e-8, format!("deviation={own:.2e} compare_solutions={lib:.2e}")))
}

fn tilted() -> ma_core::Result<QuadraticPart> {
    QuadraticPart::new(DMatrix::from_row_slice(2, 2, &[1.5, -0.4, -0.4, 1.0]), DVector::from_vec(vec![-1.0, 0.75]), 2.0)
}

fn checker_v(q: &QuadraticPart, n: usize) -> ma_core::Result<PeriodicField> {
    let d = q.det();
    let lat = TorusLattice::unit(2, n)?;
    let f = PeriodicField::from_fn(lat, |x| {
        if ((2.0 * x[0]).floor() + (2.0 * x[1]).floor()) as i64 % 2 == 0 { 1.4 * d } else { 0.6 * d }
    })?;
    let a = QuadraticPart::from_matrix(q.a.clone())?;
    Ok(solve_periodic(&PeriodicProblem::new(a, f)?, &SolveOptions::default())?.0)
}

fn quotient_equality() -> Outcome {
    let q = tilted()?;
    let v = checker_v(&q, 16)?;
    let sample = synthesize_entire(&q, &v, &BoxLattice::centered(2, 5.0, 1.0 / 16.0)?)?;
    // direct quotients at a few nodes, straight from the sample values
    let mut direct: f64 = 0.0;
    for e in [[1i64, 0], [1, 1], [2, -1], [3, 2]] {
        let ef = [e[0] as f64, e[1] as f64];
        let expected = q.rayleigh(&ef);
        for x in [[0.0, 0.0], [0.3125, -1.25], [-1.5, 0.5]] {
            let at = |s: f64| sample.u().value_at(&[x[0] + s * ef[0], x[1] + s * ef[1]]).expect("inside the sample");
            let quotient = (at(1.0) + at(-1.0) - 2.0 * at(0.0)) / (ef[0] * ef[0] + ef[1] * ef[1]);
            direct = direct.max((quotient - expected).abs());
        }
    }
    let b = estimate_b(&sample)?;
    let b_err = (0..2).map(|i| (b[i] - q.b[i]).abs()).fold(0.0, f64::max);
    let a_err = (&estimate_a(&sample, 2.0)?.a - &q.a).amax();
    let mut gap: f64 = 0.0;
    for k in 1..=3 {
        let prof = quotient_profile(&sample, &LatticeDirectionSet::new(2, k)?, &q.a, 2.0)?;
        gap = gap.max(prof.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max));
    }
    let ok = direct <= 1e-12 && gap <= 1e-12 && a_err <= 1e-12 && b_err <= 1e-12;
    Ok((ok, format!("direct={direct:.2e} gaps={gap:.2e} a_err={a_err:.2e} b_err={b_err:.2e}")))
}

fn scaling_limit() -> Outcome {
    let f = cosine_rhs(TorusLattice::unit(2, 16)?)?;
    let (v, _, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(2), f)?, &SolveOptions::default())?;
    let q = QuadraticPart::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]), DVector::from_vec(vec![0.5, 0.25]), -0.3)?;
    let sample = synthesize_entire(&q, &v, &BoxLattice::centered(2, 64.0, 0.5)?)?;
    let lambdas = [4.0, 16.0, 64.0];
    let target = BoxLattice::centered(2, 1.0, 0.125)?;
    let mut own = Vec::new();
    for &l in &lambdas {
        let mut worst: f64 = 0.0;
        for i in 0..target.len() {
            let x = target.coord(i);
            if x[0] * x[0] + x[1] * x[1] > 1.0 + 1e-12 {
                continue;
            }
            let u = sample.u().value_at(&[l * x[0], l * x[1]]).expect("rescaled node is a sample node");
            let model = 0.5 * (x[0] * x[0] + x[1] * x[1]) + (0.5 * x[0] + 0.25 * x[1]) / l;
            worst = worst.max((u / (l * l) - model).abs());
        }
        own.push(worst);
    }
    let lin = QuadraticPart::new(q.a.clone(), q.b.clone(), 0.0)?;
    let lib: Vec<f64> = scaling_errors(&sample, &lin, &lambdas, &target)?.iter().map(|e| e.error).collect();
    let agree = own.iter().zip(&lib).all(|(a, b)| (a - b).abs() <= 1e-12 * a.max(1.0));
    let slope = least_squares_slope(&lambdas, &own);
    Ok((slope <= -1.9 && agree, format!("errors={} slope={slope:.3} library_agrees={agree}", sci(&own))))
}

/// `h = u − ½x² − b x − v` on `[−1, 1]` with `v` shifted to match `u − ½x² − bx` at the origin.
fn h_on_unit_box(sample: &EntireSample, b: f64, v: &PeriodicField) -> Vec<f64> {
    let lat = sample.u().lattice();
    let residual = |x: f64, u: f64| u - 0.5 * x * x - b * x - v.value_at(&[x]).expect("sample nodes lie on the torus");
    let i0 = lat.node_at(&[0.0]).expect("origin is a node");
    let shift = residual(0.0, sample.u().values()[i0]);
    (0..lat.len())
        .map(|i| (lat.coord(i)[0], sample.u().values()[i]))
        .filter(|(x, _)| x.abs() <= 1.0 + 1e-12)
        .map(|(x, u)| residual(x, u) - shift)
        .collect()
}

fn structure_endpoint() -> Outcome {
    let res = 64;
    let f = cosine_rhs(TorusLattice::unit(1, res)?)?;
    let (v, _, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(1), f.clone())?, &SolveOptions::default())?;
    let q = QuadraticPart::new(DMatrix::identity(1, 1), DVector::from_vec(vec![-0.4]), 1.0)?;
    let mut spreads = Vec::new();
    for l in [2.0, 4.0, 8.0] {
        let (sample, _) = reconstruct_entire(&f, &q, l, 1.0 / res as f64, &SolveOptions::default())?;
        let b = estimate_b(&sample)?[0];
        let h = h_on_unit_box(&sample, b, &v);
        let (lo, hi) = h.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
        spreads.push(hi - lo);
    }
    // the layer is already at roundoff in one dimension, so allow that much wiggle
    let monotone = spreads.windows(2).all(|w| w[1] <= w[0] + 1e-10);
    Ok((monotone && spreads[2] <= 1e-3, format!("spreads={}", sci(&spreads))))
}

fn alexandrov() -> Outcome {
    let h = 1.0 / 64.0;
    let problem = DirichletProblem::new(
        ConvexDomain::rectangle([-1.0, -1.0], [1.0, 1.0])?,
        h,
        RhsSource::Function(Arc::new(|x: &[f64]| 3.0 * (x[0] * x[0] + x[1] * x[1]).powi(2))),
        BoundaryData::Function(Arc::new(|x: &[f64]| 0.25 * (x[0] * x[0] + x[1] * x[1]).powi(2))),
    )?;
    let (u, _) = solve_dirichlet(&problem, &SolveOptions::default())?;
    let mass = subdifferential_measure(&u.field)?.total();
    // interior nodes own the cells covering [−1 + h/2, 1 − h/2]²; midpoint rule there
    let a = 1.0 - h / 2.0;
    let m = 2000;
    let d = 2.0 * a / m as f64;
    let mut integral = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (x, y) = (-a + (i as f64 + 0.5) * d, -a + (j as f64 + 0.5) * d);
            integral += 3.0 * (x * x + y * y).powi(2) * d * d;
        }
    }
    let rel = ((mass - integral) / integral).abs();
    Ok((rel <= 0.05, format!("mass={mass:.5} integral={integral:.5} relative={rel:.2e}")))
}

fn monotone_scheme() -> Outcome {
    let lat = TorusLattice::unit(2, 10)?;
    let h2 = lat.max_spacing().powi(2);
    let stencil = StencilSet::new(2, 2)?;
    let a = QuadraticPart::from_matrix(DMatrix::from_row_slice(2, 2, &[1.2, 0.3, 0.3, 0.9]))?;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut violations, mut worst, mut skipped) = (0, 0.0f64, 0);
    for _ in 0..100 {
        let vals: Vec<f64> = (0..lat.len()).map(|_| 0.2 * h2 * rng.random_range(-1.0..1.0)).collect();
        let eval = |w: &[f64]| -> ma_core::Result<_> { ma_operator_periodic(&PeriodicField::new(lat.clone(), w.to_vec())?, &a, &stencil) };
        let base = eval(&vals)?;
        // raising one node lowers its own value and can only raise the others
        let node = rng.random_range(0..lat.len());
        let mut up = vals.clone();
        up[node] += 0.02 * h2;
        let after = eval(&up)?;
        for i in 0..lat.len() {
            let ok = if i == node { after.values[i] <= base.values[i] + 1e-13 } else { after.values[i] >= base.values[i] - 1e-13 };
            violations += usize::from(!ok);
        }
        let dir: Vec<f64> = (0..lat.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let lin = linearize_periodic(&PeriodicField::new(lat.clone(), vals.clone())?, &a, &stencil)?.apply(&dir);
        let eps = 1e-7 * h2;
        let shifted = |s: f64| vals.iter().zip(&dir).map(|(x, d)| x + s * eps * d).collect::<Vec<_>>();
        let (p, m) = (eval(&shifted(1.0))?, eval(&shifted(-1.0))?);
        let mut err: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..lat.len() {
            if p.active_basis[i] != m.active_basis[i] {
                skipped += 1;
                continue;
            }
            err = err.max(((p.values[i] - m.values[i]) / (2.0 * eps) - lin[i]).abs());
            scale = scale.max(lin[i].abs());
        }
        worst = worst.max(err / scale);
    }
    let mut min_gap = f64::INFINITY;
    for k in 0..1000 {
        let n = 1 + k % 4;
        let mut spd = || {
            let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            &g * g.transpose() + DMatrix::identity(n, n) * 0.01
        };
        let (m1, m2) = (spd(), spd());
        min_gap = min_gap.min(concavity_gap(&m1, &m2)?);
    }
    let ok = violations == 0 && worst <= 1e-6 && min_gap >= -1e-12;
    Ok((ok, format!("violations={violations} jacobian_rel={worst:.2e} kinks_skipped={skipped} min_gap={min_gap:.2e}")))
}

/// Box suprema `M_r = sup h` on `[−r, r]ⁿ` and the doubling inequality with the reported `C`.
fn doubling_holds(h: &ScalarField, levels: usize) -> ma_core::Result<(bool, bool)> {
    let trace = doubling_trace(h, levels)?;
    let lat = h.lattice();
    let sup = |r: f64| {
        (0..lat.len())
            .filter(|&i| lat.coord(i).iter().all(|c| c.abs() <= r + 1e-12))
            .filter_map(|i| h.get(i))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let own: Vec<f64> = trace.radii.iter().map(|&r| sup(r)).collect();
    let ok = own == trace.sups && own.windows(2).all(|w| w[1] <= 4.0 * w[0] + trace.c + 1e-12 * w[1].abs().max(1.0));
    Ok((trace.verdict, ok))
}

fn doubling_harnack() -> Outcome {
    let mut verdicts = Vec::new();

    let q = tilted()?;
    let v = checker_v(&q, 16)?;
    let sample = synthesize_entire(&q, &v, &BoxLattice::centered(2, 4.0, 1.0 / 16.0)?)?;
    let origin = sample.u().value_at(&[0.0, 0.0]).expect("origin") - q.c - v.value_at(&[0.0, 0.0]).expect("origin");
    let h_syn = sample.u().map(|x, u| u - q.quadratic(x) - q.linear(x) - v.value_at(x).expect("on torus") - origin)?;
    verdicts.push(doubling_holds(&h_syn, 2)?);

    let f = cosine_rhs(TorusLattice::unit(2, 16)?)?;
    let (vp, _, _) = solve_periodic(&PeriodicProblem::new(QuadraticPart::identity(2), f.clone())?, &SolveOptions::default())?;
    let qr = QuadraticPart::new(DMatrix::identity(2, 2), DVector::from_vec(vec![0.2, 0.1]), 0.0)?;
    let (rec, _) = reconstruct_entire(&f, &qr, 4.0, 1.0 / 16.0, &SolveOptions::default())?;
    let shift = rec.u().value_at(&[0.0, 0.0]).expect("origin") - vp.value_at(&[0.0, 0.0]).expect("origin");
    let h_rec = rec.u().map(|x, u| u - qr.quadratic(x) - qr.linear(x) - vp.value_at(x).expect("on torus") - shift)?;
    verdicts.push(doubling_holds(&h_rec, 2)?);

    // two constant-data solutions of the same checkerboard equation
    let hh = 1.0 / 16.0;
    let fc = PeriodicField::from_fn(TorusLattice::unit(2, 16)?, |x| {
        if ((2.0 * x[0]).floor() + (2.0 * x[1]).floor()) as i64 % 2 == 0 { 1.5 } else { 0.5 }
    })?;
    let solve = |d: ConvexDomain, g: f64| -> ma_core::Result<ScalarField> {
        let p = DirichletProblem::new(d, hh, RhsSource::Periodic(fc.clone()), BoundaryData::Constant(g))?;
        Ok(solve_dirichlet(&p, &SolveOptions::default())?.0.field)
    };
    let inner = solve(ConvexDomain::rectangle([-2.0, -2.0], [2.0, 2.0])?, 1.0)?;
    let outer = solve(ConvexDomain::regular_polygon([0.0, 0.0], 3.5, 16, 0.0)?, 2.0)?;
    let w = inner.map(|x, u| outer.value_at(x).expect("square inside polygon") - u)?;
    let lat = w.lattice();
    let wmin = (0..lat.len()).filter_map(|i| w.get(i)).fold(f64::INFINITY, f64::min);
    let mut ratios = Vec::new();
    for r in [0.5, 1.0, 1.5] {
        let vals: Vec<f64> = (0..lat.len())
            .filter(|&i| lat.coord(i).iter().all(|c| c.abs() <= r + 1e-12))
            .filter_map(|i| w.get(i))
            .map(|x| x - wmin)
            .collect();
        let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), x| (a.min(*x), b.max(*x)));
        ratios.push(hi / lo);
    }
    let finite = ratios.iter().all(|r| r.is_finite() && *r >= 1.0);
    let all_doubling = verdicts.iter().all(|(lib, own)| *lib && *own);
    Ok((all_doubling && finite, format!("doubling={verdicts:?} harnack={ratios:.3?}")))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(MaError::Io)?;
    let text = "criteria = 1, 2, 4, 5, 6, 10\nseed = 17\n";
    let mut bytes = Vec::new();
    for run in ["first", "second"] {
        let mut cfg = RunConfig::parse(text, dir.path())?;
        let out = dir.path().join(run);
        cfg.set("out", out.to_string_lossy())?;
        let code = cmd_verify(&cfg)?;
        if code != 0 {
            return Ok((false, format!("verify exited with {code}")));
        }
        bytes.push(std::fs::read(out.join("verify-report.json")).map_err(MaError::Io)?);
    }
    let same = bytes[0] == bytes[1];
    Ok((same, format!("report_bytes={} identical={same}", bytes[0].len())))
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: Vec<Criterion> = vec![
        ("flat case", secs(5), flat_case),
        ("one-dimensional closed form", secs(5), closed_form_1d),
        ("separable two-dimensional", secs(30), separable_2d),
        ("compatibility gate", None, compatibility_gate),
        ("uniqueness up to constants", None, uniqueness),
        ("quotient equality", None, quotient_equality),
        ("scaling limit", None, scaling_limit),
        ("structure endpoint", secs(60), structure_endpoint),
        ("Alexandrov consistency", None, alexandrov),
        ("monotone scheme", None, monotone_scheme),
        ("doubling and Harnack", None, doubling_harnack),
        ("determinism", None, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let (ok, detail) = match timed(limit, run) {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!ok);
        println!("{:>2} {:<30} {}  {detail}", i + 1, name, if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

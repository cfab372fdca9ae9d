//! The `ma-grid v1` text format.
//!
//! ```text
//! # ma-grid v1 n=2 dims=64,64 origin=0,0 spacing=0.015625,0.015625 periodic=1,1
//! 1.0000000000000000e0
//! ...
//! ```
//!
//! One value per line in row-major order, written with 17 significant digits
//! so reading back is bit-exact. Masked box nodes are written as `NaN`.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoxLattice, PeriodicField, ScalarField, TorusLattice};
use crate::error::{MaError, Result};

const MAGIC: &str = "# ma-grid v1";

/// A grid file's payload.
#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Torus(PeriodicField),
    Box(ScalarField),
}

fn join(values: impl Iterator<Item = String>) -> String {
    values.collect::<Vec<_>>().join(",")
}

fn header(n: usize, dims: &[usize], origin: &[f64], spacing: &[f64], periodic: bool) -> String {
    format!(
        "{MAGIC} n={n} dims={} origin={} spacing={} periodic={}\n",
        join(dims.iter().map(|d| d.to_string())),
        join(origin.iter().map(|o| format!("{o:?}"))),
        join(spacing.iter().map(|h| format!("{h:?}"))),
        join((0..n).map(|_| if periodic { "1".to_string() } else { "0".to_string() })),
    )
}

fn push_values(out: &mut String, values: &[f64]) {
    for v in values {
        if v.is_nan() {
            out.push_str("NaN\n");
        } else {
            let _ = writeln!(out, "{v:.16e}");
        }
    }
}

pub fn periodic_to_string(f: &PeriodicField) -> String {
    let lat = f.lattice();
    let n = lat.dim();
    let mut out = header(n, lat.dims(), &vec![0.0; n], &lat.spacings(), true);
    push_values(&mut out, f.values());
    out
}

pub fn box_to_string(u: &ScalarField) -> String {
    let lat = u.lattice();
    let n = lat.dim();
    let mut out = header(n, lat.dims(), lat.lo(), &vec![lat.spacing(); n], false);
    push_values(&mut out, u.values());
    out
}

pub fn to_string(data: &GridData) -> String {
    match data {
        GridData::Torus(f) => periodic_to_string(f),
        GridData::Box(u) => box_to_string(u),
    }
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(MaError::Parse { line, message: message.into() })
}

fn list<T: std::str::FromStr>(raw: &str, key: &str) -> Result<Vec<T>> {
    raw.split(',')
        .map(|s| s.trim().parse::<T>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .or_else(|_| perr(1, format!("bad list for `{key}`: {raw}")))
}

pub fn parse(text: &str) -> Result<GridData> {
    let mut lines = text.lines();
    let head = match lines.next() {
        Some(h) if h.starts_with(MAGIC) => h,
        _ => return perr(1, "missing `# ma-grid v1` header"),
    };
    let mut n = None;
    let mut dims = None;
    let mut origin = None;
    let mut spacing = None;
    let mut periodic = None;
    for token in head[MAGIC.len()..].split_whitespace() {
        let Some((key, val)) = token.split_once('=') else {
            return perr(1, format!("malformed header token `{token}`"));
        };
        match key {
            "n" => n = Some(val.parse::<usize>().or_else(|_| perr(1, "bad `n`"))?),
            "dims" => dims = Some(list::<usize>(val, key)?),
            "origin" => origin = Some(list::<f64>(val, key)?),
            "spacing" => spacing = Some(list::<f64>(val, key)?),
            "periodic" => periodic = Some(list::<u8>(val, key)?),
            _ => return perr(1, format!("unknown header key `{key}`")),
        }
    }
    let (Some(n), Some(dims), Some(origin), Some(spacing), Some(periodic)) = (n, dims, origin, spacing, periodic)
    else {
        return perr(1, "header must define n, dims, origin, spacing and periodic");
    };
    if [dims.len(), origin.len(), spacing.len(), periodic.len()].iter().any(|&l| l != n) {
        return perr(1, "header lists do not match n");
    }
    let total: usize = dims.iter().product();
    let mut values = Vec::with_capacity(total);
    for (k, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) => values.push(v),
            Err(_) => return perr(k + 2, format!("not a number: `{line}`")),
        }
    }
    if values.len() != total {
        return perr(1, format!("expected {total} values, found {}", values.len()));
    }
    let wrap = |e: MaError| match e {
        MaError::InvalidArgument(m) => MaError::Parse { line: 1, message: m },
        other => other,
    };
    if periodic.iter().all(|&p| p == 1) {
        let periods: Vec<f64> = (0..n).map(|i| spacing[i] * dims[i] as f64).collect();
        let lat = TorusLattice::new(&periods, &dims).map_err(wrap)?;
        Ok(GridData::Torus(PeriodicField::new(lat, values).map_err(wrap)?))
    } else if periodic.iter().all(|&p| p == 0) {
        if spacing.iter().any(|&h| h != spacing[0]) {
            return perr(1, "box grids require uniform spacing");
        }
        let h = spacing[0];
        let hi: Vec<f64> = (0..n).map(|i| origin[i] + (dims[i] - 1) as f64 * h).collect();
        let lat = BoxLattice::new(&origin, &hi, h).map_err(wrap)?;
        if lat.dims() != dims.as_slice() {
            return perr(1, "box dims inconsistent with origin and spacing");
        }
        Ok(GridData::Box(ScalarField::from_partial(lat, values).map_err(wrap)?))
    } else {
        perr(1, "mixed periodic flags are not supported")
    }
}

pub fn read_file(path: &Path) -> Result<GridData> {
    parse(&std::fs::read_to_string(path)?)
}

pub fn write_file(path: &Path, data: &GridData) -> Result<()> {
    std::fs::write(path, to_string(data))?;
    Ok(())
}

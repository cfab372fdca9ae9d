use std::path::Path;

use crate::error::{invalid, MaError, Result};

const GEOM_TOL: f64 = 1e-12;

/// Interval or strictly convex counterclockwise polygon.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexDomain {
    Interval { lo: f64, hi: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Convex hull (monotone chain), counterclockwise, collinear points dropped.
pub(crate) fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() <= GEOM_TOL && (a[1] - b[1]).abs() <= GEOM_TOL);
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let eps = GEOM_TOL * scale * scale;
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

impl ConvexDomain {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return invalid(format!("interval needs lo < hi, got [{lo}, {hi}]"));
        }
        Ok(Self::Interval { lo, hi })
    }

    /// Polygon from vertices in either orientation; stored counterclockwise.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        let mut v: Vec<[f64; 2]> = Vec::with_capacity(vertices.len());
        for p in vertices {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return invalid("polygon vertex is not finite");
            }
            if v.last().is_none_or(|q: &[f64; 2]| (q[0] - p[0]).abs() > GEOM_TOL || (q[1] - p[1]).abs() > GEOM_TOL) {
                v.push(*p);
            }
        }
        while v.len() > 1 {
            let (a, b) = (v[0], v[v.len() - 1]);
            if (a[0] - b[0]).abs() <= GEOM_TOL && (a[1] - b[1]).abs() <= GEOM_TOL {
                v.pop();
            } else {
                break;
            }
        }
        if v.len() < 3 {
            return invalid("polygon needs at least three distinct vertices");
        }
        let area2: f64 = (0..v.len()).map(|i| cross([0.0, 0.0], v[i], v[(i + 1) % v.len()])).sum();
        if area2.abs() <= GEOM_TOL {
            return invalid("polygon has empty interior");
        }
        if area2 < 0.0 {
            v.reverse();
        }
        let scale = v.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        let m = v.len();
        for i in 0..m {
            if cross(v[i], v[(i + 1) % m], v[(i + 2) % m]) <= GEOM_TOL * scale * scale {
                return invalid("polygon is not strictly convex");
            }
        }
        Ok(Self::Polygon { vertices: v })
    }

    /// Axis-aligned rectangle `[lo, hi]`.
    pub fn rectangle(lo: [f64; 2], hi: [f64; 2]) -> Result<Self> {
        Self::polygon(&[[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
    }

    /// Regular `k`-gon with circumradius `radius`, first vertex at angle `phase`.
    pub fn regular_polygon(center: [f64; 2], radius: f64, k: usize, phase: f64) -> Result<Self> {
        if k < 3 || !(radius > 0.0) {
            return invalid("regular polygon needs k >= 3 and a positive radius");
        }
        let v: Vec<[f64; 2]> = (0..k)
            .map(|i| {
                let t = phase + 2.0 * std::f64::consts::PI * i as f64 / k as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Self::polygon(&v)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Polygon { .. } => 2,
        }
    }

    /// Boundary points: interval ends or polygon vertices.
    pub fn vertices(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Interval { lo, hi } => vec![vec![*lo], vec![*hi]],
            Self::Polygon { vertices } => vertices.iter().map(|v| v.to_vec()).collect(),
        }
    }

    /// Half-spaces `n·x ≤ c` with unit outward normals.
    pub fn halfspaces(&self) -> Vec<(Vec<f64>, f64)> {
        match self {
            Self::Interval { lo, hi } => vec![(vec![-1.0], -lo), (vec![1.0], *hi)],
            Self::Polygon { vertices } => {
                let m = vertices.len();
                (0..m)
                    .map(|i| {
                        let (a, b) = (vertices[i], vertices[(i + 1) % m]);
                        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                        let len = dx.hypot(dy);
                        let n = vec![dy / len, -dx / len];
                        let c = n[0] * a[0] + n[1] * a[1];
                        (n, c)
                    })
                    .collect()
            }
        }
    }

    /// Signed distance to the boundary, positive inside.
    pub fn inner_distance(&self, x: &[f64]) -> f64 {
        self.halfspaces()
            .iter()
            .map(|(n, c)| c - n.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.inner_distance(x) >= -GEOM_TOL
    }

    /// Smallest `t > 0` with `x + t·d` on the boundary, for `x` inside.
    pub fn ray_exit(&self, x: &[f64], d: &[f64]) -> f64 {
        let mut t = f64::INFINITY;
        for (n, c) in self.halfspaces() {
            let nd: f64 = n.iter().zip(d).map(|(a, b)| a * b).sum();
            if nd > 0.0 {
                let nx: f64 = n.iter().zip(x).map(|(a, b)| a * b).sum();
                t = t.min(((c - nx) / nd).max(0.0));
            }
        }
        t
    }

    /// Bounding box `(lo, hi)`.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let vs = self.vertices();
        let n = self.dim();
        let lo = (0..n).map(|a| vs.iter().map(|v| v[a]).fold(f64::INFINITY, f64::min)).collect();
        let hi = (0..n).map(|a| vs.iter().map(|v| v[a]).fold(f64::NEG_INFINITY, f64::max)).collect();
        (lo, hi)
    }

    /// Length or area.
    pub fn volume(&self) -> f64 {
        match self {
            Self::Interval { lo, hi } => hi - lo,
            Self::Polygon { vertices } => {
                let m = vertices.len();
                0.5 * (0..m).map(|i| cross([0.0, 0.0], vertices[i], vertices[(i + 1) % m])).sum::<f64>()
            }
        }
    }

    /// One vertex per line, comma separated.
    pub fn to_csv(&self) -> String {
        self.vertices()
            .iter()
            .map(|v| v.iter().map(|c| format!("{c:?}")).collect::<Vec<_>>().join(",") + "\n")
            .collect()
    }

    /// Parses vertex CSV; one column means an interval given by its two end points.
    /// Blank lines and `#` comments are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|_| MaError::Parse { line: i + 1, message: format!("bad vertex `{line}`") })?;
            if let Some(first) = rows.first() {
                if first.len() != row.len() {
                    return Err(MaError::Parse { line: i + 1, message: "inconsistent column count".into() });
                }
            }
            rows.push(row);
        }
        let wrap = |e: MaError| match e {
            MaError::InvalidArgument(m) => MaError::Parse { line: 0, message: m },
            other => other,
        };
        match rows.first().map(|r| r.len()) {
            Some(1) if rows.len() == 2 => Self::interval(rows[0][0], rows[1][0]).map_err(wrap),
            Some(2) => Self::polygon(&rows.iter().map(|r| [r[0], r[1]]).collect::<Vec<_>>()).map_err(wrap),
            _ => Err(MaError::Parse { line: 0, message: "expected two interval ends or x,y vertices".into() }),
        }
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Image under `x ↦ a x + b` (determinant of `a` must be positive).
    pub fn transformed(&self, a: &nalgebra::DMatrix<f64>, b: &[f64]) -> Result<Self> {
        match self {
            Self::Interval { lo, hi } => {
                let s = a[(0, 0)];
                let (p, q) = (s * lo + b[0], s * hi + b[0]);
                Self::interval(p.min(q), p.max(q))
            }
            Self::Polygon { vertices } => {
                let v: Vec<[f64; 2]> = vertices
                    .iter()
                    .map(|p| {
                        [a[(0, 0)] * p[0] + a[(0, 1)] * p[1] + b[0], a[(1, 0)] * p[0] + a[(1, 1)] * p[1] + b[1]]
                    })
                    .collect();
                Self::polygon(&v)
            }
        }
    }
}

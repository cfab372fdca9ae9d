use crate::error::{invalid, Result};
use crate::lattice::MAX_DIM;

/// Integer direction, padded to [`MAX_DIM`] components.
pub type Direction = [i64; MAX_DIM];

/// Primitive lattice directions (one per ± pair) and their mutually orthogonal bases.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilSet {
    n: usize,
    width: usize,
    directions: Vec<Direction>,
    bases: Vec<Vec<usize>>,
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Sign convention: the first nonzero component is positive.
fn canonical(mut v: Direction, n: usize) -> Direction {
    if let Some(first) = v[..n].iter().copied().find(|&c| c != 0) {
        if first < 0 {
            for c in &mut v[..n] {
                *c = -*c;
            }
        }
    }
    v
}

impl StencilSet {
    /// `build_stencil(n, W)`.
    ///
    /// In 2-D every primitive `v` with `‖v‖∞ ≤ W` pairs with its quarter turn;
    /// 3-D stencils use the coordinate basis only. Bases are stored in
    /// lexicographic order of their sorted direction lists, which puts the
    /// coordinate basis first and fixes the tie-break used by the operator.
    pub fn new(n: usize, width: usize) -> Result<Self> {
        if !(1..=3).contains(&width) {
            return invalid(format!("stencil width must be 1, 2 or 3, got {width}"));
        }
        match n {
            1 => Ok(Self { n, width, directions: vec![[1, 0, 0]], bases: vec![vec![0]] }),
            2 => {
                let w = width as i64;
                let mut directions = Vec::new();
                for a in -w..=w {
                    for b in -w..=w {
                        if (a, b) == (0, 0) || gcd(a, b) != 1 {
                            continue;
                        }
                        let v = canonical([a, b, 0], 2);
                        if !directions.contains(&v) {
                            directions.push(v);
                        }
                    }
                }
                directions.sort();
                let mut pairs: Vec<Vec<Direction>> = Vec::new();
                for &v in &directions {
                    let r = canonical([-v[1], v[0], 0], 2);
                    let mut pair = vec![v, r];
                    pair.sort();
                    if !pairs.contains(&pair) {
                        pairs.push(pair);
                    }
                }
                pairs.sort();
                let bases = pairs
                    .iter()
                    .map(|p| p.iter().map(|d| directions.iter().position(|x| x == d).unwrap()).collect())
                    .collect();
                Ok(Self { n, width, directions, bases })
            }
            3 => Ok(Self {
                n,
                width,
                directions: vec![[0, 0, 1], [0, 1, 0], [1, 0, 0]],
                bases: vec![vec![0, 1, 2]],
            }),
            _ => invalid(format!("stencils support n in 1..=3, got {n}")),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn directions(&self) -> &[Direction] {
        &self.directions
    }

    /// Each basis lists `n` indices into [`StencilSet::directions`].
    pub fn bases(&self) -> &[Vec<usize>] {
        &self.bases
    }

    /// Largest per-axis reach of any direction.
    pub fn reach(&self) -> i64 {
        self.directions.iter().flat_map(|d| d[..self.n].iter().map(|c| c.abs())).max().unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent enumeration of orthogonal primitive pairs in a `W` box.
    fn brute_force_bases(w: i64) -> usize {
        let mut prims = Vec::new();
        for a in -w..=w {
            for b in -w..=w {
                if (a, b) != (0, 0) && gcd(a, b) == 1 {
                    prims.push((a, b));
                }
            }
        }
        let mut count = 0;
        for (i, p) in prims.iter().enumerate() {
            for q in &prims[i + 1..] {
                if p.0 * q.0 + p.1 * q.1 == 0 {
                    count += 1;
                }
            }
        }
        // each unordered pair of lines appears 4 times under sign flips
        count / 4
    }

    #[test]
    fn one_dimensional() {
        let s = StencilSet::new(1, 2).unwrap();
        assert_eq!(s.directions().len(), 1);
        assert_eq!(s.bases().len(), 1);
    }

    #[test]
    fn width_one_in_two_dimensions() {
        let s = StencilSet::new(2, 1).unwrap();
        let dirs: Vec<_> = s.directions().iter().map(|d| (d[0], d[1])).collect();
        assert_eq!(dirs, vec![(0, 1), (1, -1), (1, 0), (1, 1)]);
        assert_eq!(s.bases().len(), 2);
        // coordinate basis first
        let first: Vec<_> = s.bases()[0].iter().map(|&k| s.directions()[k]).collect();
        assert_eq!(first, vec![[0, 1, 0], [1, 0, 0]]);
    }

    #[test]
    fn width_two_and_three_match_enumeration() {
        let s = StencilSet::new(2, 2).unwrap();
        assert_eq!(s.directions().len(), 8);
        for d in [[2, 1, 0], [1, 2, 0], [2, -1, 0], [1, -2, 0]] {
            assert!(s.directions().contains(&d));
        }
        assert_eq!(s.bases().len(), 4);
        assert_eq!(brute_force_bases(2), 4);
        let s3 = StencilSet::new(2, 3).unwrap();
        assert_eq!(s3.bases().len(), brute_force_bases(3));
        for s in [&s, &s3] {
            for b in s.bases() {
                let (u, v) = (s.directions()[b[0]], s.directions()[b[1]]);
                assert_eq!(u[0] * v[0] + u[1] * v[1], 0);
            }
        }
    }

    #[test]
    fn rejects_unsupported() {
        assert!(StencilSet::new(2, 0).is_err());
        assert!(StencilSet::new(2, 4).is_err());
        assert!(StencilSet::new(4, 1).is_err());
        assert_eq!(StencilSet::new(3, 2).unwrap().bases().len(), 1);
    }
}

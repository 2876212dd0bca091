//! Gilbert-Johnson-Keerthi distance between convex hulls of finite point sets.
//!
//! Supports are exact for finite sets, so the only approximation is the
//! termination test. Alongside the distance estimate `|v|` the query keeps a
//! certified lower bound `v.w / |v|` from the last support point, which is
//! what the branch-and-bound callers rely on.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DIM: usize = 3;
const MAX_ITERATIONS: usize = 128;

/// Finite point set standing for its convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct ConvexPointSet {
    dim: usize,
    data: Vec<f64>,
}

impl TryFrom<Vec<Vec<f64>>> for ConvexPointSet {
    type Error = Error;

    fn try_from(points: Vec<Vec<f64>>) -> Result<Self> {
        ConvexPointSet::new(points)
    }
}

impl From<ConvexPointSet> for Vec<Vec<f64>> {
    fn from(s: ConvexPointSet) -> Self {
        s.points().map(<[f64]>::to_vec).collect()
    }
}

impl ConvexPointSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(dim * points.len());
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(dim, data)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::domain(format!(
                "convex point sets support 1 to {MAX_DIM} dimensions, got {dim}"
            )));
        }
        if data.is_empty() || data.len() % dim != 0 {
            return Err(Error::domain("convex point set must be non-empty"));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("convex point set entries must be finite"));
        }
        Ok(ConvexPointSet { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    pub(crate) fn as_flat(&self) -> &[f64] {
        &self.data
    }
}

/// Outcome of a GJK query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GjkOutcome {
    /// Length of the closest point found in the Minkowski difference; an
    /// upper bound on the true distance.
    pub distance: f64,
    /// Certified lower bound on the distance (zero when the hulls meet).
    pub lower_bound: f64,
    pub iterations: usize,
}

/// Distance between the convex hulls of `a` and `b`; zero when they intersect.
pub fn gjk_distance(a: &ConvexPointSet, b: &ConvexPointSet, tol: f64) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::domain("GJK tolerance must be positive"));
    }
    Ok(gjk(a.dim, &a.data, &b.data, tol).distance)
}

type Vec3 = [f64; MAX_DIM];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn support(dim: usize, points: &[f64], dir: &Vec3) -> Vec3 {
    let mut best = f64::NEG_INFINITY;
    let mut out = [0.0; MAX_DIM];
    for p in points.chunks(dim) {
        let d: f64 = p.iter().zip(dir).map(|(x, y)| x * y).sum();
        if d > best {
            best = d;
            out[..dim].copy_from_slice(p);
        }
    }
    out
}

/// Core GJK on flat `dim`-vector arrays.
pub(crate) fn gjk(dim: usize, a: &[f64], b: &[f64], tol: f64) -> GjkOutcome {
    let mut v = [0.0; MAX_DIM];
    for d in 0..dim {
        v[d] = a[d] - b[d];
    }
    let scale = a
        .iter()
        .chain(b)
        .fold(1.0_f64, |m, x| m.max(x.abs()));
    let tiny = (1e-14 * scale).powi(2);
    let mut simplex: Vec<Vec3> = Vec::with_capacity(MAX_DIM + 1);
    simplex.push(v);
    let mut lower = 0.0_f64;
    let mut iterations = 0;

    loop {
        let vv = dot(&v, &v);
        if vv <= tiny {
            return GjkOutcome {
                distance: 0.0,
                lower_bound: 0.0,
                iterations,
            };
        }
        iterations += 1;
        let neg = [-v[0], -v[1], -v[2]];
        let sa = support(dim, a, &neg);
        let sb = support(dim, b, &v);
        let w = [sa[0] - sb[0], sa[1] - sb[1], sa[2] - sb[2]];
        let vw = dot(&v, &w);
        lower = lower.max(vw / vv.sqrt());
        let gap = vv - vw;
        let repeated = simplex
            .iter()
            .any(|s| (0..MAX_DIM).all(|d| s[d] == w[d]));
        if gap <= tol * tol || gap <= 1e-13 * vv || repeated || iterations >= MAX_ITERATIONS {
            return GjkOutcome {
                distance: vv.sqrt(),
                lower_bound: lower.max(0.0),
                iterations,
            };
        }
        simplex.push(w);
        let (closest, kept) = closest_on_simplex(&simplex);
        simplex = kept;
        let new_vv = dot(&closest, &closest);
        if simplex.len() == dim + 1 || new_vv <= tiny {
            return GjkOutcome {
                distance: 0.0,
                lower_bound: 0.0,
                iterations,
            };
        }
        if new_vv >= vv {
            // No progress; `v` is already optimal to working precision.
            return GjkOutcome {
                distance: vv.sqrt(),
                lower_bound: lower.max(0.0),
                iterations,
            };
        }
        v = closest;
    }
}

/// Closest point to the origin on the hull of up to four points, found by
/// checking every face and keeping the one whose affine projection has
/// non-negative barycentric coordinates.
fn closest_on_simplex(simplex: &[Vec3]) -> (Vec3, Vec<Vec3>) {
    let k = simplex.len();
    let mut best: Option<(f64, Vec3, u32)> = None;
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let Some(lambda) = affine_projection(simplex, &idx) else {
            continue;
        };
        if lambda.iter().any(|l| *l < 0.0) {
            continue;
        }
        let mut x = [0.0; MAX_DIM];
        for (l, i) in lambda.iter().zip(&idx) {
            for d in 0..MAX_DIM {
                x[d] += l * simplex[*i][d];
            }
        }
        let xx = dot(&x, &x);
        let better = match best {
            None => true,
            Some((b, _, bm)) => xx < b || (xx == b && mask.count_ones() < bm.count_ones()),
        };
        if better {
            best = Some((xx, x, mask));
        }
    }
    // Vertices always qualify, so a face is always found.
    let (_, x, mask) = best.expect("a vertex is always a candidate");
    let kept = (0..k)
        .filter(|i| mask & (1 << i) != 0)
        .map(|i| simplex[i])
        .collect();
    (x, kept)
}

/// Barycentric coordinates of the origin's projection onto the affine hull
/// of the selected points, or `None` when they are affinely dependent.
fn affine_projection(s: &[Vec3], idx: &[usize]) -> Option<Vec<f64>> {
    let m = idx.len() - 1;
    if m == 0 {
        return Some(vec![1.0]);
    }
    let base = s[idx[0]];
    let edges: Vec<Vec3> = idx[1..]
        .iter()
        .map(|i| {
            let p = s[*i];
            [p[0] - base[0], p[1] - base[1], p[2] - base[2]]
        })
        .collect();
    // Solve (E^T E) mu = -E^T base.
    let mut g = [[0.0; 4]; 3];
    for r in 0..m {
        for c in 0..m {
            g[r][c] = dot(&edges[r], &edges[c]);
        }
        g[r][m] = -dot(&edges[r], &base);
    }
    let norm = (0..m).map(|r| g[r][r]).fold(0.0, f64::max);
    for col in 0..m {
        let piv = (col..m)
            .max_by(|x, y| g[*x][col].abs().total_cmp(&g[*y][col].abs()))
            .expect("non-empty range");
        if g[piv][col].abs() <= 1e-12 * norm.max(f64::MIN_POSITIVE) {
            return None;
        }
        g.swap(col, piv);
        for r in 0..m {
            if r != col {
                let f = g[r][col] / g[col][col];
                for c in col..=m {
                    g[r][c] -= f * g[col][c];
                }
            }
        }
    }
    let mu: Vec<f64> = (0..m).map(|r| g[r][m] / g[r][r]).collect();
    let mut lambda = Vec::with_capacity(m + 1);
    lambda.push(1.0 - mu.iter().sum::<f64>());
    lambda.extend(mu);
    Some(lambda)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[&[f64]]) -> ConvexPointSet {
        ConvexPointSet::new(points.iter().map(|p| p.to_vec()).collect()).unwrap()
    }

    fn square(cx: f64) -> ConvexPointSet {
        set(&[
            &[cx - 0.5, -0.5],
            &[cx + 0.5, -0.5],
            &[cx + 0.5, 0.5],
            &[cx - 0.5, 0.5],
        ])
    }

    #[test]
    fn separated_unit_squares() {
        let d = gjk_distance(&square(0.0), &square(4.0), 1e-9).unwrap();
        assert!((d - 3.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn overlapping_sets_touch() {
        assert_eq!(gjk_distance(&square(0.0), &square(0.5), 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn point_to_segment() {
        let d = gjk_distance(&set(&[&[0.0, 0.0]]), &set(&[&[1.0, 1.0], &[2.0, 2.0]]), 1e-9).unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-9);
        let d = gjk_distance(&set(&[&[0.0, 2.0]]), &set(&[&[-1.0, 0.0], &[3.0, 0.0]]), 1e-9).unwrap();
        assert!((d - 2.0).abs() < 1e-9);
    }

    #[test]
    fn three_dimensional_tetrahedra() {
        let a = set(&[&[0., 0., 0.], &[1., 0., 0.], &[0., 1., 0.], &[0., 0., 1.]]);
        let b = set(&[&[2., 2., 2.], &[3., 2., 2.], &[2., 3., 2.], &[2., 2., 3.]]);
        // Closest features: face x+y+z=1 of `a` and vertex (2,2,2) of `b`.
        let d = gjk_distance(&a, &b, 1e-10).unwrap();
        let expected = (6.0 - 1.0) / 3f64.sqrt();
        assert!((d - expected).abs() < 1e-9, "{d} vs {expected}");
        let c = set(&[&[0.2, 0.2, 0.2], &[5., 5., 5.]]);
        assert_eq!(gjk_distance(&a, &c, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_intervals() {
        let a = set(&[&[0.0], &[1.0]]);
        let b = set(&[&[3.5], &[2.5]]);
        assert!((gjk_distance(&a, &b, 1e-12).unwrap() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = set(&[&[0.0, 0.0]]);
        let b = set(&[&[0.0, 0.0, 1.0]]);
        assert!(matches!(
            gjk_distance(&a, &b, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn lower_bound_never_exceeds_distance() {
        let out = gjk(2, square(0.0).as_flat(), square(4.0).as_flat(), 1e-3);
        assert!(out.lower_bound <= out.distance + 1e-15);
        assert!(out.lower_bound > 2.99);
    }

    #[test]
    fn json_is_a_point_list() {
        let s = square(1.0);
        let txt = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<ConvexPointSet>(&txt).unwrap(), s);
        assert!(serde_json::from_str::<ConvexPointSet>("[]").is_err());
    }
}

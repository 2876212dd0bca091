//! Minimum spatial distance between curves, or between a curve and a convex
//! shape, by subdivision with GJK lower bounds and endpoint upper bounds.

use super::gjk::{gjk, ConvexPointSet};
use crate::error::{Error, Result};
use crate::poly::{split_points, BernsteinPoly};

pub const DEFAULT_DISTANCE_EPSILON: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceQuery {
    /// Incumbent minimum distance; `+inf` when nothing is known.
    pub alpha: f64,
    pub epsilon: f64,
    pub max_depth: usize,
}

impl Default for DistanceQuery {
    fn default() -> Self {
        DistanceQuery {
            alpha: f64::INFINITY,
            epsilon: DEFAULT_DISTANCE_EPSILON,
            max_depth: super::DEFAULT_MAX_DEPTH,
        }
    }
}

impl DistanceQuery {
    pub fn with_epsilon(epsilon: f64) -> Self {
        DistanceQuery {
            epsilon,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceEstimate {
    /// Incumbent: a distance actually realized by a pair of points.
    pub value: f64,
    /// Certified lower bound, at most `epsilon` below `value` unless exhausted.
    pub lower_bound: f64,
    pub exhausted: bool,
}

struct Search {
    dim: usize,
    alpha: f64,
    lower: f64,
    epsilon: f64,
    gjk_tol: f64,
    max_depth: usize,
    exhausted: bool,
    split_second: bool,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl Search {
    fn endpoints<'a>(&self, p: &'a [f64]) -> [&'a [f64]; 2] {
        let d = self.dim;
        [&p[..d], &p[p.len() - d..]]
    }

    fn upper(&self, p: &[f64], q: &[f64]) -> f64 {
        let pe = self.endpoints(p);
        if self.split_second {
            let qe = self.endpoints(q);
            pe.iter()
                .flat_map(|a| qe.iter().map(move |b| dist(a, b)))
                .fold(f64::INFINITY, f64::min)
        } else {
            // Fixed shape: distance from each curve endpoint to the hull.
            pe.iter()
                .map(|a| gjk(self.dim, a, q, self.gjk_tol).distance)
                .fold(f64::INFINITY, f64::min)
        }
    }

    fn lower(&self, p: &[f64], q: &[f64]) -> f64 {
        gjk(self.dim, p, q, self.gjk_tol).lower_bound
    }

    fn run(&mut self, p: &[f64], q: &[f64], lower: f64, depth: usize) {
        let upper = self.upper(p, q);
        if upper < self.alpha {
            self.alpha = upper;
        }
        if lower >= self.alpha - self.epsilon {
            self.lower = self.lower.min(lower);
            return;
        }
        if depth >= self.max_depth {
            self.exhausted = true;
            self.lower = self.lower.min(lower);
            return;
        }
        let (pa, pb) = split_points(self.dim, p, 0.5);
        let mut children: Vec<(Vec<f64>, Vec<f64>, f64)> = if self.split_second {
            let (qa, qb) = split_points(self.dim, q, 0.5);
            vec![
                (pa.clone(), qa.clone(), 0.0),
                (pa, qb.clone(), 0.0),
                (pb.clone(), qa, 0.0),
                (pb, qb, 0.0),
            ]
        } else {
            vec![(pa, q.to_vec(), 0.0), (pb, q.to_vec(), 0.0)]
        };
        for c in children.iter_mut() {
            c.2 = self.lower(&c.0, &c.1);
        }
        children.sort_by(|x, y| x.2.total_cmp(&y.2));
        for (cp, cq, cl) in children {
            self.run(&cp, &cq, cl, depth + 1);
        }
    }
}

fn search(dim: usize, p: &[f64], q: &[f64], query: &DistanceQuery, split_second: bool) -> Result<DistanceEstimate> {
    if !(query.epsilon > 0.0) {
        return Err(Error::domain("distance tolerance must be positive"));
    }
    if !(1..=3).contains(&dim) {
        return Err(Error::domain(format!(
            "distance queries support 1 to 3 dimensions, got {dim}"
        )));
    }
    let mut s = Search {
        dim,
        alpha: query.alpha,
        lower: f64::INFINITY,
        epsilon: query.epsilon,
        gjk_tol: query.epsilon * 1e-3,
        max_depth: query.max_depth,
        exhausted: false,
        split_second,
    };
    let l0 = s.lower(p, q);
    s.run(p, q, l0, 0);
    Ok(DistanceEstimate {
        value: s.alpha,
        lower_bound: s.lower.min(s.alpha).max(0.0),
        exhausted: s.exhausted,
    })
}

/// Minimum distance between the point sets traced by two curves. The curves'
/// time intervals play no role.
pub fn min_distance(a: &BernsteinPoly, b: &BernsteinPoly, query: &DistanceQuery) -> Result<DistanceEstimate> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    search(a.dim(), a.as_flat(), b.as_flat(), query, true)
}

/// Minimum distance between a curve and a fixed convex shape (or point).
pub fn min_distance_to_shape(
    a: &BernsteinPoly,
    shape: &ConvexPointSet,
    query: &DistanceQuery,
) -> Result<DistanceEstimate> {
    if a.dim() != shape.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: shape.dim(),
        });
    }
    search(a.dim(), a.as_flat(), shape.as_flat(), query, false)
}

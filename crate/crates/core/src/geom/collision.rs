use serde::{Deserialize, Serialize};

use super::gjk::gjk;
use crate::error::{Error, Result};
use crate::poly::{split_points, BernsteinPoly};

pub const DEFAULT_MAX_ITER: usize = 32;

/// Give up refining once this many hull pairs are still in contact.
const MAX_LIVE_PAIRS: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionVerdict {
    /// Every remaining pair of coefficient hulls is disjoint: a certificate.
    NoCollision,
    CollisionPossible,
}

/// Collision test between two curves by repeated midpoint subdivision of
/// the pieces whose hulls still touch.
pub fn collision_check(a: &BernsteinPoly, b: &BernsteinPoly, max_iter: usize) -> Result<CollisionVerdict> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    if max_iter == 0 {
        return Err(Error::domain("collision check needs max_iter >= 1"));
    }
    let dim = a.dim();
    let scale = a
        .as_flat()
        .iter()
        .chain(b.as_flat())
        .fold(1.0_f64, |m, v| m.max(v.abs()));
    let separation = 1e-12 * scale;
    let touching = |p: &[f64], q: &[f64]| gjk(dim, p, q, separation).lower_bound <= separation;
    let mut live = vec![(a.as_flat().to_vec(), b.as_flat().to_vec())];
    if !touching(&live[0].0, &live[0].1) {
        return Ok(CollisionVerdict::NoCollision);
    }
    for _ in 1..max_iter {
        if live.len() > MAX_LIVE_PAIRS {
            return Ok(CollisionVerdict::CollisionPossible);
        }
        let mut next = Vec::with_capacity(4 * live.len());
        for (p, q) in live {
            let (pa, pb) = split_points(dim, &p, 0.5);
            let (qa, qb) = split_points(dim, &q, 0.5);
            for (cp, cq) in [(&pa, &qa), (&pa, &qb), (&pb, &qa), (&pb, &qb)] {
                if touching(cp, cq) {
                    next.push((cp.clone(), cq.clone()));
                }
            }
        }
        if next.is_empty() {
            return Ok(CollisionVerdict::NoCollision);
        }
        live = next;
    }
    Ok(CollisionVerdict::CollisionPossible)
}

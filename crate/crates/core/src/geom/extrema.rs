//! Conservative bounds and branch-and-bound extrema of 1-D polynomials.

use crate::error::{Error, Result};
use crate::poly::{split_points, BernsteinPoly};

pub const DEFAULT_EXTREMA_EPSILON: f64 = 1e-6;
pub const DEFAULT_MAX_DEPTH: usize = 64;

/// Range of the (optionally elevated) coefficients, which always encloses
/// the curve.
pub fn coeff_bounds(poly: &BernsteinPoly, elevate_to: Option<usize>) -> Result<(f64, f64)> {
    require_scalar(poly)?;
    match elevate_to {
        Some(m) => Ok(poly.elevate(m)?.coeff_range()),
        None => Ok(poly.coeff_range()),
    }
}

fn require_scalar(poly: &BernsteinPoly) -> Result<()> {
    if poly.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: poly.dim(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremaQuery {
    /// Incumbent maximum. Must start below every value of the curve; for
    /// [`minimum`] it is the incumbent of the maximization of `-C`.
    pub alpha: f64,
    pub epsilon: f64,
    pub max_depth: usize,
    /// Report the certified bound instead of the incumbent.
    pub conservative: bool,
}

impl Default for ExtremaQuery {
    fn default() -> Self {
        ExtremaQuery {
            alpha: f64::NEG_INFINITY,
            epsilon: DEFAULT_EXTREMA_EPSILON,
            max_depth: DEFAULT_MAX_DEPTH,
            conservative: false,
        }
    }
}

impl ExtremaQuery {
    pub fn with_epsilon(epsilon: f64) -> Self {
        ExtremaQuery {
            epsilon,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::domain("extrema tolerance must be positive"));
        }
        if self.max_depth == 0 {
            return Err(Error::domain("extrema depth cap must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    /// `bound` when the query was conservative, `estimate` otherwise.
    pub value: f64,
    /// Incumbent: a value attained by the curve, within epsilon of the extremum.
    pub estimate: f64,
    /// Certified bound: never on the wrong side of the true extremum.
    pub bound: f64,
    /// The depth cap cut the search short somewhere.
    pub exhausted: bool,
    /// Parameter value where `estimate` is attained; `None` when `alpha`
    /// was never beaten.
    pub location: Option<f64>,
}

struct Search {
    alpha: f64,
    at: Option<f64>,
    bound: f64,
    epsilon: f64,
    max_depth: usize,
    exhausted: bool,
}

impl Search {
    /// `c` covers the fraction `[a, b]` of the interval.
    fn run(&mut self, c: &[f64], a: f64, b: f64, depth: usize) {
        let n = c.len() - 1;
        let lower = c[0].max(c[n]);
        let (i_ub, upper) = c
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        if lower > self.alpha {
            self.alpha = lower;
            self.at = Some(if c[0] >= c[n] { a } else { b });
        }
        if self.alpha > upper || upper - lower < self.epsilon {
            self.bound = self.bound.max(upper);
            return;
        }
        if depth >= self.max_depth {
            self.exhausted = true;
            self.bound = self.bound.max(upper);
            return;
        }
        // i_ub is interior here: an end index would make upper == lower.
        let s = i_ub as f64 / n as f64;
        let (left, right) = split_points(1, c, s);
        let lmax = left.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let rmax = right.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mid = a + s * (b - a);
        if lmax >= rmax {
            self.run(&left, a, mid, depth + 1);
            self.run(&right, mid, b, depth + 1);
        } else {
            self.run(&right, mid, b, depth + 1);
            self.run(&left, a, mid, depth + 1);
        }
    }
}

fn maximize(coeffs: &[f64], q: &ExtremaQuery, t0: f64, tf: f64) -> Extremum {
    let mut search = Search {
        alpha: q.alpha,
        at: None,
        bound: f64::NEG_INFINITY,
        epsilon: q.epsilon,
        max_depth: q.max_depth,
        exhausted: false,
    };
    search.run(coeffs, 0.0, 1.0, 0);
    // Pruned subtrees only ever had bounds below alpha.
    let bound = search.bound.max(search.alpha);
    Extremum {
        value: if q.conservative { bound } else { search.alpha },
        estimate: search.alpha,
        bound,
        exhausted: search.exhausted,
        location: search.at.map(|s| t0 + s * (tf - t0)),
    }
}

/// Maximum of a 1-D polynomial over its interval by branch and bound.
pub fn maximum(poly: &BernsteinPoly, q: &ExtremaQuery) -> Result<Extremum> {
    require_scalar(poly)?;
    q.validate()?;
    Ok(maximize(poly.as_flat(), q, poly.t0(), poly.tf()))
}

/// Minimum of a 1-D polynomial, computed as the negated maximum of `-C`.
pub fn minimum(poly: &BernsteinPoly, q: &ExtremaQuery) -> Result<Extremum> {
    require_scalar(poly)?;
    q.validate()?;
    let neg: Vec<f64> = poly.as_flat().iter().map(|v| -v).collect();
    let m = maximize(&neg, q, poly.t0(), poly.tf());
    Ok(Extremum {
        value: -m.value,
        estimate: -m.estimate,
        bound: -m.bound,
        ..m
    })
}

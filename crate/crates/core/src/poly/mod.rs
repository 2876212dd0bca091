//! N-dimensional Bernstein polynomials over arbitrary time intervals.
//!
//! Coefficients are stored one point per column: an `N x (n+1)` matrix laid
//! out as `n+1` contiguous `N`-vectors. All operators read the interval from
//! the polynomial itself so derivative and integral scaling by `tf - t0` is
//! never supplied separately.

mod tables;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::RationalBernsteinPoly;

pub use tables::{
    binomial, elevation_matrix, max_cached_degree, ElevationMatrix, DEFAULT_MAX_DEGREE,
    MAX_DEGREE_ENV,
};

/// Value of the `i`-th degree-`n` Bernstein basis polynomial on `[t0, tf]`.
pub fn basis_value(i: usize, n: usize, t: f64, t0: f64, tf: f64) -> Result<f64> {
    if i > n {
        return Err(Error::domain(format!("basis index {i} exceeds degree {n}")));
    }
    check_interval(t0, tf)?;
    if !(t0..=tf).contains(&t) {
        return Err(Error::domain(format!("t = {t} outside [{t0}, {tf}]")));
    }
    let s = (t - t0) / (tf - t0);
    Ok(binomial(n, i) * s.powi(i as i32) * (1.0 - s).powi((n - i) as i32))
}

fn check_interval(t0: f64, tf: f64) -> Result<()> {
    if !(t0.is_finite() && tf.is_finite() && tf > t0) {
        return Err(Error::domain(format!(
            "interval [{t0}, {tf}] must be finite with tf > t0"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolyRepr", into = "PolyRepr")]
pub struct BernsteinPoly {
    dim: usize,
    /// Column-major: coefficient `i` occupies `data[i*dim..(i+1)*dim]`.
    data: Vec<f64>,
    t0: f64,
    tf: f64,
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    t0: f64,
    tf: f64,
    coeffs: Vec<Vec<f64>>,
}

impl TryFrom<PolyRepr> for BernsteinPoly {
    type Error = Error;

    fn try_from(r: PolyRepr) -> Result<Self> {
        BernsteinPoly::new(r.coeffs, r.t0, r.tf)
    }
}

impl From<BernsteinPoly> for PolyRepr {
    fn from(p: BernsteinPoly) -> Self {
        PolyRepr {
            t0: p.t0,
            tf: p.tf,
            coeffs: p.rows(),
        }
    }
}

impl BernsteinPoly {
    /// Builds a polynomial from coefficient rows (one row per spatial dimension).
    pub fn new(rows: Vec<Vec<f64>>, t0: f64, tf: f64) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::domain("polynomial needs at least one dimension"));
        }
        let cols = rows[0].len();
        if cols == 0 {
            return Err(Error::domain("polynomial needs at least one coefficient"));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch {
                expected: cols,
                found: bad.len(),
            });
        }
        let mut data = vec![0.0; dim * cols];
        for (d, row) in rows.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                data[i * dim + d] = *v;
            }
        }
        Self::from_flat(dim, data, t0, tf)
    }

    /// Builds a polynomial from control points (one vector per coefficient).
    pub fn from_points(points: &[Vec<f64>], t0: f64, tf: f64) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        if dim == 0 {
            return Err(Error::domain("polynomial needs at least one non-empty point"));
        }
        let mut data = Vec::with_capacity(dim * points.len());
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            data.extend_from_slice(p);
        }
        Self::from_flat(dim, data, t0, tf)
    }

    /// 1-D polynomial from its coefficients.
    pub fn scalar(coeffs: Vec<f64>, t0: f64, tf: f64) -> Result<Self> {
        Self::from_flat(1, coeffs, t0, tf)
    }

    /// Polynomial whose coefficients all equal `point`.
    pub fn constant(point: &[f64], degree: usize, t0: f64, tf: f64) -> Result<Self> {
        let mut data = Vec::with_capacity(point.len() * (degree + 1));
        for _ in 0..=degree {
            data.extend_from_slice(point);
        }
        Self::from_flat(point.len(), data, t0, tf)
    }

    pub fn from_flat(dim: usize, data: Vec<f64>, t0: f64, tf: f64) -> Result<Self> {
        check_interval(t0, tf)?;
        if dim == 0 || data.is_empty() || data.len() % dim != 0 {
            return Err(Error::domain(format!(
                "{} coefficient values cannot form {dim}-dimensional points",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("coefficients must be finite"));
        }
        Ok(BernsteinPoly { dim, data, t0, tf })
    }

    /// Internal constructor for results of exact coefficient algebra.
    pub(crate) fn raw(dim: usize, data: Vec<f64>, t0: f64, tf: f64) -> Self {
        debug_assert!(dim > 0 && !data.is_empty() && data.len() % dim == 0);
        BernsteinPoly { dim, data, t0, tf }
    }

    pub fn degree(&self) -> usize {
        self.data.len() / self.dim - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.tf)
    }

    /// Coefficient `i` as an `N`-vector.
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.dim)
    }

    /// Flat column-major coefficient storage.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, d: usize) -> Vec<f64> {
        self.data.iter().skip(d).step_by(self.dim).copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim).map(|d| self.row(d)).collect()
    }

    /// The `d`-th component as a 1-D polynomial.
    pub fn component(&self, d: usize) -> BernsteinPoly {
        BernsteinPoly::raw(1, self.row(d), self.t0, self.tf)
    }

    /// The same coefficients placed on a different interval.
    pub fn with_interval(&self, t0: f64, tf: f64) -> Result<Self> {
        check_interval(t0, tf)?;
        Ok(BernsteinPoly {
            t0,
            tf,
            ..self.clone()
        })
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !(self.t0..=self.tf).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside [{}, {}]",
                self.t0, self.tf
            )));
        }
        Ok(())
    }

    /// Evaluates the curve at `t` with the de Casteljau recursion.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        self.check_t(t)?;
        Ok(self.eval_fraction((t - self.t0) / (self.tf - self.t0)))
    }

    /// Evaluates at normalized parameter `s = (t - t0) / (tf - t0)`.
    pub fn eval_fraction(&self, s: f64) -> Vec<f64> {
        let dim = self.dim;
        let mut work = self.data.clone();
        let r = 1.0 - s;
        for level in (1..=self.degree()).rev() {
            for i in 0..level {
                for d in 0..dim {
                    work[i * dim + d] = r * work[i * dim + d] + s * work[(i + 1) * dim + d];
                }
            }
        }
        work.truncate(dim);
        work
    }

    /// Splits at `t_div` into pieces on `[t0, t_div]` and `[t_div, tf]`.
    pub fn split(&self, t_div: f64) -> Result<(Self, Self)> {
        if !(t_div > self.t0 && t_div < self.tf) {
            return Err(Error::domain(format!(
                "split point {t_div} must lie strictly inside ({}, {})",
                self.t0, self.tf
            )));
        }
        let s = (t_div - self.t0) / (self.tf - self.t0);
        let (l, r) = split_points(self.dim, &self.data, s);
        Ok((
            BernsteinPoly::raw(self.dim, l, self.t0, t_div),
            BernsteinPoly::raw(self.dim, r, t_div, self.tf),
        ))
    }

    /// Derivative as a degree `n-1` polynomial; degree 0 yields the zero constant.
    pub fn derivative(&self) -> Self {
        let n = self.degree();
        let dim = self.dim;
        if n == 0 {
            return BernsteinPoly::raw(dim, vec![0.0; dim], self.t0, self.tf);
        }
        let k = n as f64 / (self.tf - self.t0);
        let data = (0..n * dim)
            .map(|j| k * (self.data[j + dim] - self.data[j]))
            .collect();
        BernsteinPoly::raw(dim, data, self.t0, self.tf)
    }

    /// Definite integral over `[t0, tf]`.
    pub fn integrate(&self) -> Vec<f64> {
        let n = self.degree();
        let k = (self.tf - self.t0) / (n + 1) as f64;
        let mut acc = vec![0.0; self.dim];
        for p in self.points() {
            for (a, v) in acc.iter_mut().zip(p) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a *= k);
        acc
    }

    /// Re-expresses the curve at degree `m >= n`.
    pub fn elevate(&self, m: usize) -> Result<Self> {
        let n = self.degree();
        if m == n {
            return Ok(self.clone());
        }
        let e = elevation_matrix(n, m)?;
        Ok(BernsteinPoly::raw(
            self.dim,
            e.apply(self.dim, &self.data),
            self.t0,
            self.tf,
        ))
    }

    /// Elevates by one degree with the two-term recursion.
    pub fn elevate_once(&self) -> Self {
        let n = self.degree();
        let dim = self.dim;
        let mut out = vec![0.0; dim * (n + 2)];
        out[..dim].copy_from_slice(self.point(0));
        out[(n + 1) * dim..].copy_from_slice(self.point(n));
        for i in 1..=n {
            let a = i as f64 / (n + 1) as f64;
            for d in 0..dim {
                out[i * dim + d] = a * self.data[(i - 1) * dim + d] + (1.0 - a) * self.data[i * dim + d];
            }
        }
        BernsteinPoly::raw(dim, out, self.t0, self.tf)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.t0 != other.t0 || self.tf != other.tf {
            return Err(Error::IntervalMismatch {
                a0: self.t0,
                af: self.tf,
                b0: other.t0,
                bf: other.tf,
            });
        }
        Ok(())
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.degree().max(other.degree());
        let a = self.elevate(m)?;
        let b = other.elevate(m)?;
        let data = a.data.iter().zip(&b.data).map(|(x, y)| f(*x, *y)).collect();
        Ok(BernsteinPoly::raw(self.dim, data, self.t0, self.tf))
    }

    /// Coefficient-wise sum, elevating the lower-degree operand first.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn scale(&self, k: f64) -> Self {
        BernsteinPoly::raw(
            self.dim,
            self.data.iter().map(|v| v * k).collect(),
            self.t0,
            self.tf,
        )
    }

    /// Adds a constant to every coefficient (shifts the curve by `k`).
    pub fn offset(&self, k: &[f64]) -> Result<Self> {
        if k.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: k.len(),
            });
        }
        let mut data = self.data.clone();
        for chunk in data.chunks_mut(self.dim) {
            for (c, v) in chunk.iter_mut().zip(k) {
                *c += v;
            }
        }
        Ok(BernsteinPoly::raw(self.dim, data, self.t0, self.tf))
    }

    /// Product of two 1-D polynomials (degree `m + n`).
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        for p in [self, other] {
            if p.dim != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: p.dim,
                });
            }
        }
        self.check_compatible(other)?;
        Ok(BernsteinPoly::raw(
            1,
            product_coeffs(&self.data, &other.data),
            self.t0,
            self.tf,
        ))
    }

    /// Componentwise inner product `sum_d a_d(t) b_d(t)` as a 1-D polynomial.
    pub fn dot(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let m = self.degree();
        let n = other.degree();
        let mut acc = vec![0.0; m + n + 1];
        for d in 0..self.dim {
            let prod = product_coeffs(&self.row(d), &other.row(d));
            for (a, p) in acc.iter_mut().zip(prod) {
                *a += p;
            }
        }
        Ok(BernsteinPoly::raw(1, acc, self.t0, self.tf))
    }

    /// `|C(t)|^2` as a 1-D polynomial of degree `2n`.
    pub fn norm_squared(&self) -> Self {
        self.dot(self).expect("self-compatible")
    }

    /// Ratio of two same-degree 1-D polynomials as a rational polynomial.
    ///
    /// The denominator's coefficients become the weights and must all be
    /// strictly positive.
    pub fn divide(&self, denominator: &Self) -> Result<RationalBernsteinPoly> {
        for p in [self, denominator] {
            if p.dim != 1 {
                return Err(Error::DimensionMismatch {
                    expected: 1,
                    found: p.dim,
                });
            }
        }
        self.check_compatible(denominator)?;
        if self.degree() != denominator.degree() {
            return Err(Error::domain(format!(
                "division needs equal degrees, got {} and {}",
                self.degree(),
                denominator.degree()
            )));
        }
        if let Some(w) = denominator.data.iter().find(|w| **w <= 0.0) {
            return Err(Error::domain(format!(
                "denominator coefficient {w} is not strictly positive"
            )));
        }
        let coeffs = self
            .data
            .iter()
            .zip(&denominator.data)
            .map(|(x, y)| x / y)
            .collect();
        RationalBernsteinPoly::new(
            vec![coeffs],
            denominator.data.clone(),
            self.t0,
            self.tf,
        )
    }

    /// First derivatives at `t0` and `tf` from the end coefficients.
    pub fn end_derivatives(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::domain("end derivatives need degree >= 1"));
        }
        let k = n as f64 / (self.tf - self.t0);
        let start = self
            .point(1)
            .iter()
            .zip(self.point(0))
            .map(|(a, b)| k * (a - b))
            .collect();
        let end = self
            .point(n)
            .iter()
            .zip(self.point(n - 1))
            .map(|(a, b)| k * (a - b))
            .collect();
        Ok((start, end))
    }

    /// Smallest and largest coefficient of a 1-D polynomial.
    pub fn coeff_range(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            })
    }
}

/// de Casteljau subdivision of contiguous `dim`-vectors at fraction `s`.
pub(crate) fn split_points(dim: usize, points: &[f64], s: f64) -> (Vec<f64>, Vec<f64>) {
    let cols = points.len() / dim;
    let n = cols - 1;
    let r = 1.0 - s;
    let mut work = points.to_vec();
    let mut left = vec![0.0; points.len()];
    let mut right = vec![0.0; points.len()];
    left[..dim].copy_from_slice(&work[..dim]);
    right[n * dim..].copy_from_slice(&work[n * dim..]);
    for j in 1..=n {
        for i in 0..=(n - j) {
            for d in 0..dim {
                work[i * dim + d] = r * work[i * dim + d] + s * work[(i + 1) * dim + d];
            }
        }
        left[j * dim..(j + 1) * dim].copy_from_slice(&work[..dim]);
        let k = n - j;
        right[k * dim..(k + 1) * dim].copy_from_slice(&work[k * dim..(k + 1) * dim]);
    }
    (left, right)
}

/// Coefficients of the product of two 1-D Bernstein polynomials.
pub(crate) fn product_coeffs(x: &[f64], y: &[f64]) -> Vec<f64> {
    let m = x.len() - 1;
    let n = y.len() - 1;
    let mut out = vec![0.0; m + n + 1];
    for (k, o) in out.iter_mut().enumerate() {
        let lo = k.saturating_sub(n);
        let hi = m.min(k);
        let denom = binomial(m + n, k);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += binomial(m, j) * binomial(n, k - j) * x[j] * y[k - j];
        }
        *o = acc / denom;
    }
    out
}

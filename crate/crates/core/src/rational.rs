//! Rational Bernstein polynomials with strictly positive weights.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::BernsteinPoly;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RationalRepr", into = "RationalRepr")]
pub struct RationalBernsteinPoly {
    dim: usize,
    data: Vec<f64>,
    weights: Vec<f64>,
    t0: f64,
    tf: f64,
}

#[derive(Serialize, Deserialize)]
struct RationalRepr {
    t0: f64,
    tf: f64,
    coeffs: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl TryFrom<RationalRepr> for RationalBernsteinPoly {
    type Error = Error;

    fn try_from(r: RationalRepr) -> Result<Self> {
        RationalBernsteinPoly::new(r.coeffs, r.weights, r.t0, r.tf)
    }
}

impl From<RationalBernsteinPoly> for RationalRepr {
    fn from(r: RationalBernsteinPoly) -> Self {
        RationalRepr {
            t0: r.t0,
            tf: r.tf,
            coeffs: r.coefficients().rows(),
            weights: r.weights,
        }
    }
}

/// Output of one weighted de Casteljau pass: the curve point plus
/// `(weights, points)` of the left and right pieces.
struct Subdivision {
    point: Vec<f64>,
    left: (Vec<f64>, Vec<f64>),
    right: (Vec<f64>, Vec<f64>),
}

impl RationalBernsteinPoly {
    pub fn new(rows: Vec<Vec<f64>>, weights: Vec<f64>, t0: f64, tf: f64) -> Result<Self> {
        let c = BernsteinPoly::new(rows, t0, tf)?;
        Self::from_parts(&c, weights)
    }

    /// Combines an ordinary polynomial's coefficients with a weight vector.
    pub fn from_parts(coeffs: &BernsteinPoly, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != coeffs.degree() + 1 {
            return Err(Error::DimensionMismatch {
                expected: coeffs.degree() + 1,
                found: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::domain(format!(
                "rational weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(RationalBernsteinPoly {
            dim: coeffs.dim(),
            data: coeffs.as_flat().to_vec(),
            weights,
            t0: coeffs.t0(),
            tf: coeffs.tf(),
        })
    }

    pub fn degree(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.t0, self.tf)
    }

    pub fn coefficients(&self) -> BernsteinPoly {
        BernsteinPoly::raw(self.dim, self.data.clone(), self.t0, self.tf)
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Evaluates with the weighted de Casteljau recursion.
    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        if !(self.t0..=self.tf).contains(&t) {
            return Err(Error::domain(format!(
                "t = {t} outside [{}, {}]",
                self.t0, self.tf
            )));
        }
        let s = (t - self.t0) / (self.tf - self.t0);
        Ok(self.casteljau(s).point)
    }

    /// Runs the weighted recursion at fraction `s`.
    fn casteljau(&self, s: f64) -> Subdivision {
        let dim = self.dim;
        let n = self.degree();
        let r = 1.0 - s;
        let mut w = self.weights.clone();
        let mut p = self.data.clone();
        let mut left_w = vec![0.0; n + 1];
        let mut left_p = vec![0.0; (n + 1) * dim];
        let mut right_w = vec![0.0; n + 1];
        let mut right_p = vec![0.0; (n + 1) * dim];
        left_w[0] = w[0];
        left_p[..dim].copy_from_slice(&p[..dim]);
        right_w[n] = w[n];
        right_p[n * dim..].copy_from_slice(&p[n * dim..]);
        for j in 1..=n {
            for i in 0..=(n - j) {
                let a = r * w[i];
                let b = s * w[i + 1];
                let wn = a + b;
                for d in 0..dim {
                    p[i * dim + d] = (a * p[i * dim + d] + b * p[(i + 1) * dim + d]) / wn;
                }
                w[i] = wn;
            }
            left_w[j] = w[0];
            left_p[j * dim..(j + 1) * dim].copy_from_slice(&p[..dim]);
            let k = n - j;
            right_w[k] = w[k];
            right_p[k * dim..(k + 1) * dim].copy_from_slice(&p[k * dim..(k + 1) * dim]);
        }
        Subdivision {
            point: p[..dim].to_vec(),
            left: (left_w, left_p),
            right: (right_w, right_p),
        }
    }

    /// Splits at `t_div` into two rational pieces of the same degree.
    pub fn split(&self, t_div: f64) -> Result<(Self, Self)> {
        if !(t_div > self.t0 && t_div < self.tf) {
            return Err(Error::domain(format!(
                "split point {t_div} must lie strictly inside ({}, {})",
                self.t0, self.tf
            )));
        }
        let s = (t_div - self.t0) / (self.tf - self.t0);
        let Subdivision {
            left: (lw, lp),
            right: (rw, rp),
            ..
        } = self.casteljau(s);
        Ok((
            RationalBernsteinPoly {
                dim: self.dim,
                data: lp,
                weights: lw,
                t0: self.t0,
                tf: t_div,
            },
            RationalBernsteinPoly {
                dim: self.dim,
                data: rp,
                weights: rw,
                t0: t_div,
                tf: self.tf,
            },
        ))
    }

    /// Identical curve at degree `n + 1`.
    pub fn elevate(&self) -> Self {
        let dim = self.dim;
        let n = self.degree();
        let mut w = vec![0.0; n + 2];
        let mut p = vec![0.0; (n + 2) * dim];
        w[0] = self.weights[0];
        w[n + 1] = self.weights[n];
        p[..dim].copy_from_slice(self.point(0));
        p[(n + 1) * dim..].copy_from_slice(self.point(n));
        for i in 1..=n {
            let a = i as f64 / (n + 1) as f64;
            let wa = a * self.weights[i - 1];
            let wb = (1.0 - a) * self.weights[i];
            w[i] = wa + wb;
            let (pa, pb) = (self.point(i - 1), self.point(i));
            for d in 0..dim {
                p[i * dim + d] = (wa * pa[d] + wb * pb[d]) / w[i];
            }
        }
        RationalBernsteinPoly {
            dim,
            data: p,
            weights: w,
            t0: self.t0,
            tf: self.tf,
        }
    }

    /// First derivatives at `t0` and `tf`.
    pub fn end_derivatives(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.degree();
        if n == 0 {
            return Err(Error::domain("end derivatives need degree >= 1"));
        }
        let h = self.tf - self.t0;
        let w = &self.weights;
        let ks = n as f64 * w[1] / (h * w[0]);
        let ke = n as f64 * w[n - 1] / (h * w[n]);
        let start = self
            .point(1)
            .iter()
            .zip(self.point(0))
            .map(|(a, b)| ks * (a - b))
            .collect();
        let end = self
            .point(n)
            .iter()
            .zip(self.point(n - 1))
            .map(|(a, b)| ke * (a - b))
            .collect();
        Ok((start, end))
    }

    /// Conservative range of a 1-D rational polynomial from its coefficients.
    pub fn bounds(&self) -> Result<(f64, f64)> {
        if self.dim != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: self.dim,
            });
        }
        Ok(self.coefficients().coeff_range())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(c: &[f64], w: &[f64]) -> RationalBernsteinPoly {
        RationalBernsteinPoly::new(vec![c.to_vec()], w.to_vec(), 0.0, 1.0).unwrap()
    }

    #[test]
    fn rejects_non_positive_weights() {
        assert!(RationalBernsteinPoly::new(vec![vec![1.0, 2.0]], vec![1.0, 0.0], 0.0, 1.0).is_err());
        assert!(RationalBernsteinPoly::new(vec![vec![1.0, 2.0]], vec![1.0, -2.0], 0.0, 1.0).is_err());
        assert!(RationalBernsteinPoly::new(vec![vec![1.0, 2.0]], vec![1.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn equal_weights_reduce_to_polynomial() {
        let c = [1.0, -3.0, 4.0, 2.0];
        let r = rat(&c, &[2.5; 4]);
        let p = BernsteinPoly::scalar(c.to_vec(), 0.0, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            assert!((r.evaluate(t).unwrap()[0] - p.evaluate(t).unwrap()[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoints_are_first_and_last_coefficients() {
        let r = rat(&[1.5, -3.0, 4.0, 2.0], &[0.3, 2.0, 1.0, 5.0]);
        assert_eq!(r.evaluate(0.0).unwrap(), vec![1.5]);
        assert!((r.evaluate(1.0).unwrap()[0] - 2.0).abs() < 1e-15);
        assert!(r.evaluate(1.2).is_err());
    }

    #[test]
    fn unit_weight_split_matches_polynomial_split() {
        let c = vec![0.0, 0.0, 10.0, 10.0];
        let (l, r) = rat(&c, &[1.0; 4]).split(0.5).unwrap();
        assert_eq!(l.coefficients().row(0), vec![0.0, 0.0, 2.5, 5.0]);
        assert_eq!(r.coefficients().row(0), vec![5.0, 7.5, 10.0, 10.0]);
        assert!(l.weights().iter().chain(r.weights()).all(|w| *w == 1.0));
    }

    #[test]
    fn split_shares_the_division_point() {
        let r = rat(&[1.0, 4.0, -2.0, 3.0], &[1.0, 0.2, 3.0, 0.7]);
        let (a, b) = r.split(0.3).unwrap();
        let at = r.evaluate(0.3).unwrap()[0];
        assert!((a.evaluate(0.3).unwrap()[0] - at).abs() < 1e-12);
        assert!((b.evaluate(0.3).unwrap()[0] - at).abs() < 1e-12);
        assert!(r.split(1.0).is_err());
    }

    #[test]
    fn unit_weight_elevation_matches_polynomial() {
        let c = vec![5., 0., 2., 5., 7., 5.];
        let e = rat(&c, &[1.0; 6]).elevate();
        assert!(e.weights().iter().all(|w| (*w - 1.0).abs() < 1e-15));
        let pe = BernsteinPoly::scalar(c, 0.0, 1.0).unwrap().elevate(6).unwrap();
        for (a, b) in e.coefficients().row(0).iter().zip(pe.row(0)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn elevation_preserves_endpoints() {
        let r = rat(&[1.0, 4.0, -2.0], &[2.0, 0.2, 3.0]);
        let e = r.elevate();
        assert_eq!(e.degree(), 3);
        assert_eq!(e.weights()[0], 2.0);
        assert_eq!(e.weights()[3], 3.0);
        assert_eq!(e.coefficients().row(0)[0], 1.0);
        assert_eq!(e.coefficients().row(0)[3], -2.0);
    }

    #[test]
    fn end_derivative_linear_case() {
        let r = rat(&[0.0, 1.0], &[1.0, 2.0]);
        let (a, _) = r.end_derivatives().unwrap();
        assert_eq!(a, vec![2.0]);
    }

    #[test]
    fn end_derivative_unit_weights_reduce() {
        let c = vec![1.0, 3.0, 2.0, 7.0];
        let r = RationalBernsteinPoly::new(vec![c.clone()], vec![1.0; 4], 0.0, 2.0).unwrap();
        let p = BernsteinPoly::scalar(c, 0.0, 2.0).unwrap();
        assert_eq!(r.end_derivatives().unwrap(), p.end_derivatives().unwrap());
    }

    #[test]
    fn bounds_of_constant() {
        assert_eq!(rat(&[2.0, 2.0, 2.0], &[1.0, 5.0, 0.1]).bounds().unwrap(), (2.0, 2.0));
    }

    #[test]
    fn json_shape() {
        let r = rat(&[1.0, 2.0], &[1.0, 3.0]);
        let s = serde_json::to_string(&r).unwrap();
        assert_eq!(s, r#"{"t0":0.0,"tf":1.0,"coeffs":[[1.0,2.0]],"weights":[1.0,3.0]}"#);
        assert_eq!(serde_json::from_str::<RationalBernsteinPoly>(&s).unwrap(), r);
    }
}

//! Cached binomial coefficients and degree-elevation matrices.
//!
//! Binomials come from a Pascal triangle built once up to a maximum degree
//! (64 by default, overridable with the `BERNOPT_MAX_DEGREE` environment
//! variable). Requests above the cap fall back to the multiplicative formula,
//! so the cap bounds memory, not the usable degree.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_DEGREE: usize = 64;
pub const MAX_DEGREE_ENV: &str = "BERNOPT_MAX_DEGREE";

fn pascal() -> &'static Vec<Vec<f64>> {
    static TABLE: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let cap = std::env::var(MAX_DEGREE_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .unwrap_or(DEFAULT_MAX_DEGREE);
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(cap + 1);
        rows.push(vec![1.0]);
        for n in 1..=cap {
            let prev = &rows[n - 1];
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = prev[k - 1] + prev[k];
            }
            rows.push(row);
        }
        rows
    })
}

/// Largest degree served straight from the Pascal table.
pub fn max_cached_degree() -> usize {
    pascal().len() - 1
}

/// Binomial coefficient `C(n, k)` in floating point; zero when `k > n`.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let table = pascal();
    if n < table.len() {
        return table[n][k];
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Degree-elevation matrix from degree `n` to degree `m`, stored row-major
/// with one row per source coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationMatrix {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl ElevationMatrix {
    fn build(n: usize, m: usize) -> Self {
        let cols = m + 1;
        let mut data = vec![0.0; (n + 1) * cols];
        for i in 0..=n {
            for j in 0..=(m - n) {
                data[i * cols + i + j] = binomial(m - n, j) * binomial(n, i) / binomial(m, i + j);
            }
        }
        ElevationMatrix { n, m, data }
    }

    pub fn rows(&self) -> usize {
        self.n + 1
    }

    pub fn cols(&self) -> usize {
        self.m + 1
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * (self.m + 1) + col]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.m + 1).map(|r| r.to_vec()).collect()
    }

    /// Applies the matrix to `dim`-dimensional points stored contiguously.
    pub(crate) fn apply(&self, dim: usize, points: &[f64]) -> Vec<f64> {
        debug_assert_eq!(points.len(), dim * (self.n + 1));
        let (n, m) = (self.n, self.m);
        let cols = m + 1;
        let mut out = vec![0.0; dim * cols];
        for k in 0..=m {
            let lo = k.saturating_sub(m - n);
            let hi = n.min(k);
            let dst = &mut out[k * dim..(k + 1) * dim];
            for i in lo..=hi {
                let e = self.data[i * cols + k];
                let src = &points[i * dim..(i + 1) * dim];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += e * s;
                }
            }
        }
        out
    }
}

/// Returns the (cached) elevation matrix for `n -> m`.
pub fn elevation_matrix(n: usize, m: usize) -> Result<Arc<ElevationMatrix>> {
    if m < n {
        return Err(Error::domain(format!(
            "cannot elevate degree {n} down to degree {m}"
        )));
    }
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<ElevationMatrix>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("elevation cache poisoned").get(&(n, m)) {
        return Ok(Arc::clone(hit));
    }
    let built = Arc::new(ElevationMatrix::build(n, m));
    let mut guard = cache.lock().expect("elevation cache poisoned");
    Ok(Arc::clone(guard.entry((n, m)).or_insert(built)))
}

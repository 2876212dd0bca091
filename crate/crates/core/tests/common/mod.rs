//! Sampling oracles and random instances shared by the integration tests.
#![allow(dead_code)]

use bernopt::BernsteinPoly;
use rand::Rng;

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// Direct Bernstein sum, independent of the de Casteljau code path.
pub fn direct(coeffs: &[f64], s: f64) -> f64 {
    let n = coeffs.len() - 1;
    let mut binom = 1.0;
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate() {
        acc += c * binom * s.powi(i as i32) * (1.0 - s).powi((n - i) as i32);
        binom = binom * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

pub fn direct_point(p: &BernsteinPoly, t: f64) -> Vec<f64> {
    let (t0, tf) = p.interval();
    let s = (t - t0) / (tf - t0);
    p.rows().iter().map(|r| direct(r, s)).collect()
}

pub fn grid(t0: f64, tf: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..=n).map(move |k| if k == n { tf } else { t0 + (tf - t0) * k as f64 / n as f64 })
}

pub fn random_poly<R: Rng>(rng: &mut R, dim: usize, degree: usize, scale: f64) -> BernsteinPoly {
    let t0 = rng.gen_range(-5.0..5.0);
    let tf = t0 + rng.gen_range(0.5..10.0);
    random_poly_on(rng, dim, degree, scale, t0, tf)
}

pub fn random_poly_on<R: Rng>(rng: &mut R, dim: usize, degree: usize, scale: f64, t0: f64, tf: f64) -> BernsteinPoly {
    let rows = (0..dim)
        .map(|_| (0..=degree).map(|_| rng.gen_range(-scale..scale)).collect())
        .collect();
    BernsteinPoly::new(rows, t0, tf).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `n + 1` evenly spaced `(t, point)` pairs.
pub fn samples(p: &BernsteinPoly, n: usize) -> Vec<(f64, Vec<f64>)> {
    let (t0, tf) = p.interval();
    (0..=n)
        .map(|k| {
            let s = k as f64 / n as f64;
            (s, p.eval_fraction(s))
        })
        .map(|(s, x)| (t0 + s * (tf - t0), x))
        .collect()
}

/// Minimum distance between two curves over all parameter pairs: a coarse
/// grid, then local refinement around the best few cells.
pub fn grid_min_distance(a: &BernsteinPoly, b: &BernsteinPoly) -> f64 {
    const N: usize = 400;
    let sa: Vec<Vec<f64>> = (0..=N).map(|k| a.eval_fraction(k as f64 / N as f64)).collect();
    let sb: Vec<Vec<f64>> = (0..=N).map(|k| b.eval_fraction(k as f64 / N as f64)).collect();
    let mut cells: Vec<(f64, usize, usize)> = Vec::with_capacity((N + 1) * (N + 1));
    for (i, x) in sa.iter().enumerate() {
        for (j, y) in sb.iter().enumerate() {
            cells.push((dist(x, y), i, j));
        }
    }
    cells.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut best = cells[0].0;
    for &(_, i, j) in cells.iter().take(8) {
        best = best.min(refine(a, b, i as f64 / N as f64, j as f64 / N as f64, 1.0 / N as f64));
    }
    best
}

fn refine(a: &BernsteinPoly, b: &BernsteinPoly, mut u: f64, mut v: f64, mut h: f64) -> f64 {
    let mut best = dist(&a.eval_fraction(u), &b.eval_fraction(v));
    for _ in 0..40 {
        let mut moved = false;
        for (du, dv) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h), (h, h), (-h, -h), (h, -h), (-h, h)] {
            let (nu, nv) = ((u + du).clamp(0.0, 1.0), (v + dv).clamp(0.0, 1.0));
            let d = dist(&a.eval_fraction(nu), &b.eval_fraction(nv));
            if d < best {
                best = d;
                u = nu;
                v = nv;
                moved = true;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    best
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Composite Gauss-Legendre (5 point) quadrature.
pub fn quadrature(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let mid = a + h * (k as f64 + 0.5);
            X.iter().zip(W).map(|(x, w)| w * f(mid + 0.5 * h * x)).sum::<f64>() * 0.5 * h
        })
        .sum()
}


pub const DENSE: usize = 200;

/// How far dense samples of a 1-D polynomial stray outside its coefficient range.
pub fn hull_excess(p: &BernsteinPoly) -> f64 {
    let (lo, hi) = p.coeff_range();
    samples(p, DENSE)
        .iter()
        .map(|(_, x)| (lo - x[0]).max(x[0] - hi).max(0.0))
        .fold(0.0, f64::max)
}

/// Split at fraction `frac`; worst deviation of either half from the original.
pub fn split_error(p: &BernsteinPoly, frac: f64) -> f64 {
    let (t0, tf) = p.interval();
    let t_div = t0 + frac * (tf - t0);
    let (l, r) = p.split(t_div).unwrap();
    let mut worst: f64 = 0.0;
    for half in [&l, &r] {
        let (a, b) = half.interval();
        for t in grid(a, b, DENSE) {
            worst = worst.max(max_abs_diff(&half.evaluate(t).unwrap(), &direct_point(p, t)));
        }
    }
    worst
}

/// Elevate to `m`; worst dense-sample deviation, infinite if an endpoint moved.
pub fn elevation_error(p: &BernsteinPoly, m: usize) -> f64 {
    let e = p.elevate(m).unwrap();
    if e.point(0) != p.point(0) || e.point(m) != p.point(p.degree()) {
        return f64::INFINITY;
    }
    let (t0, tf) = p.interval();
    grid(t0, tf, DENSE)
        .map(|t| max_abs_diff(&e.evaluate(t).unwrap(), &direct_point(p, t)))
        .fold(0.0, f64::max)
}

/// Derivative against a five-point central difference on interior points,
/// relative to the largest derivative magnitude (at least 1).
pub fn derivative_error(p: &BernsteinPoly) -> f64 {
    let d = p.derivative();
    let (t0, tf) = p.interval();
    let h = 1e-3 * (tf - t0);
    let f = |t: f64| direct_point(p, t);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 1.0;
    for t in grid(t0 + 2.0 * h, tf - 2.0 * h, 100) {
        let (a, b, c, e) = (f(t - 2.0 * h), f(t - h), f(t + h), f(t + 2.0 * h));
        let exact = d.evaluate(t).unwrap();
        for k in 0..p.dim() {
            let fd = (a[k] - 8.0 * b[k] + 8.0 * c[k] - e[k]) / (12.0 * h);
            worst = worst.max((fd - exact[k]).abs());
            scale = scale.max(exact[k].abs());
        }
    }
    worst / scale
}

pub fn integral_error(p: &BernsteinPoly) -> f64 {
    let (t0, tf) = p.interval();
    let got = p.integrate();
    (0..p.dim())
        .map(|k| (got[k] - quadrature(|t| direct_point(p, t)[k], t0, tf, 16)).abs())
        .fold(0.0, f64::max)
}

pub fn product_error(f: &BernsteinPoly, g: &BernsteinPoly) -> f64 {
    let h = f.multiply(g).unwrap();
    let (t0, tf) = f.interval();
    grid(t0, tf, DENSE)
        .map(|t| (h.evaluate(t).unwrap()[0] - direct_point(f, t)[0] * direct_point(g, t)[0]).abs())
        .fold(0.0, f64::max)
}

pub fn ratio_error(f: &BernsteinPoly, g: &BernsteinPoly) -> f64 {
    let r = f.divide(g).unwrap();
    let (t0, tf) = f.interval();
    grid(t0, tf, DENSE)
        .map(|t| (r.evaluate(t).unwrap()[0] - direct_point(f, t)[0] / direct_point(g, t)[0]).abs())
        .fold(0.0, f64::max)
}

/// Coefficient-to-curve gap `max_i |P_{i,m} - C(t_i)|` after elevating to `m`.
pub fn elevation_gap(p: &BernsteinPoly, m: usize) -> f64 {
    let e = p.elevate(m).unwrap();
    let (t0, tf) = p.interval();
    (0..=m)
        .map(|i| {
            let t = t0 + (tf - t0) * i as f64 / m as f64;
            max_abs_diff(e.point(i), &direct_point(p, t))
        })
        .fold(0.0, f64::max)
}

pub const GAP_DEGREES: [usize; 4] = [16, 32, 64, 128];

/// Gaps along [`GAP_DEGREES`]: whether they never increase, and the worst
/// ratio between consecutive doublings (gaps below 1e-12 are skipped).
pub fn elevation_convergence(p: &BernsteinPoly) -> (bool, f64) {
    let gaps: Vec<f64> = GAP_DEGREES.iter().map(|&m| elevation_gap(p, m)).collect();
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let ratio = gaps
        .windows(2)
        .filter(|w| w[0] > 1e-12)
        .map(|w| w[1] / w[0])
        .fold(0.0, f64::max);
    (monotone, ratio)
}

/// Random curve pairs of degree 3 to 8 in 2-D or 3-D. The second curve is
/// shifted by a random offset so the set mixes crossing and separated pairs.
pub fn random_pairs(seed: u64, count: usize) -> Vec<(BernsteinPoly, BernsteinPoly)> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let dim = rng.gen_range(2..=3);
            let (na, nb) = (rng.gen_range(3..=8), rng.gen_range(3..=8));
            let tf = rng.gen_range(0.5..3.0);
            let a = random_poly_on(&mut rng, dim, na, 5.0, 0.0, 1.0);
            let b = random_poly_on(&mut rng, dim, nb, 5.0, 0.0, tf);
            let shift: Vec<f64> = (0..dim).map(|_| rng.gen_range(-5.0..5.0)).collect();
            (a, b.offset(&shift).unwrap())
        })
        .collect()
}

/// Gap below which the sampling oracle counts two curves as intersecting.
pub const CONTACT: f64 = 1e-6;

pub fn quadratic() -> bernopt::NlpProblem {
    bernopt::NlpProblem::new(vec![3.0, 4.0], |x| x[0] * x[0] + x[1] * x[1])
}

/// `min x` subject to `x >= 1`, starting from 5.
pub fn bounded_linear() -> bernopt::NlpProblem {
    bernopt::NlpProblem::new(vec![5.0], |x| x[0]).inequality("x_at_least_one", |x| 1.0 - x[0])
}

pub fn rosenbrock() -> bernopt::NlpProblem {
    bernopt::NlpProblem::new(vec![-1.2, 1.0], |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
}

/// Bit-level fingerprint of a result: shortest round-trip float formatting.
pub fn fingerprint<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string(value).unwrap()
}

pub fn scenario(name: &str) -> bernopt::planner::ScenarioConfig {
    bernopt::planner::ScenarioConfig::load(fixture(name)).unwrap()
}

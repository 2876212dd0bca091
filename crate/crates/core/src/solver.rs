//! Bundled augmented Lagrangian solver with an L-BFGS inner loop and
//! forward-difference gradients.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{violation, ConstraintKind, MeritStep, NlpProblem, SolverResult};

/// Cap on gradient samples per fallback step.
const SAMPLES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverOptions {
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub feasibility_tol: f64,
    pub step_tol: f64,
    pub grad_tol: f64,
    /// Stop once two consecutive feasible outer iterates differ in objective
    /// by at most this, relative.
    pub objective_tol: f64,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub penalty_max: f64,
    /// Relative forward-difference step.
    pub fd_step: f64,
    pub lbfgs_memory: usize,
    /// Extra solves from perturbed starting points; the best result wins.
    pub restarts: usize,
    pub restart_scale: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_outer_iters: 40,
            max_inner_iters: 200,
            feasibility_tol: 1e-6,
            step_tol: 1e-9,
            grad_tol: 1e-9,
            objective_tol: 1e-8,
            penalty_init: 10.0,
            penalty_growth: 10.0,
            penalty_max: 1e10,
            fd_step: 1e-6,
            lbfgs_memory: 10,
            restarts: 0,
            restart_scale: 0.05,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("feasibility_tol", self.feasibility_tol),
            ("step_tol", self.step_tol),
            ("grad_tol", self.grad_tol),
            ("objective_tol", self.objective_tol),
            ("penalty_init", self.penalty_init),
            ("fd_step", self.fd_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.penalty_growth > 1.0) {
            return Err(Error::config("penalty_growth must exceed 1"));
        }
        if !(self.penalty_max >= self.penalty_init) {
            return Err(Error::config("penalty_max must be at least penalty_init"));
        }
        if self.max_outer_iters == 0 || self.max_inner_iters == 0 || self.lbfgs_memory == 0 {
            return Err(Error::config("iteration limits and memory must be at least 1"));
        }
        Ok(())
    }
}

/// Anything that can solve an [`NlpProblem`].
pub trait Solver {
    fn solve(&self, problem: &NlpProblem) -> Result<SolverResult>;
}

#[derive(Debug, Clone, Default)]
pub struct AugmentedLagrangian {
    pub options: SolverOptions,
}

impl AugmentedLagrangian {
    pub fn new(options: SolverOptions) -> Self {
        AugmentedLagrangian { options }
    }
}

impl Solver for AugmentedLagrangian {
    fn solve(&self, problem: &NlpProblem) -> Result<SolverResult> {
        solve(problem, &self.options)
    }
}

/// Solves `problem` with the bundled method.
pub fn solve(problem: &NlpProblem, opts: &SolverOptions) -> Result<SolverResult> {
    opts.validate()?;
    problem.validate()?;
    let mut x0 = problem.initial_guess.clone();
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "initial guess".into() });
    }
    problem.project(&mut x0);
    let mut best = run(problem, opts, x0.clone())?;
    if opts.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for _ in 0..opts.restarts {
            let mut x = x0.clone();
            for v in x.iter_mut() {
                *v += opts.restart_scale * v.abs().max(1.0) * rng.gen_range(-1.0..=1.0);
            }
            problem.project(&mut x);
            let Ok(r) = run(problem, opts, x) else { continue };
            if better(&r, &best) {
                best = r;
            }
        }
    }
    Ok(best)
}

fn better(a: &SolverResult, b: &SolverResult) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.objective < b.objective,
        (false, false) => a.max_violation < b.max_violation,
    }
}

#[derive(Clone)]
struct Point {
    f: f64,
    c: Vec<Vec<f64>>,
}

struct Multipliers {
    values: Vec<Vec<f64>>,
    rho: f64,
}

struct Context<'a> {
    problem: &'a NlpProblem,
    opts: &'a SolverOptions,
    /// Blocks to re-evaluate when variable `j` moves.
    affected: Vec<Vec<usize>>,
}

impl<'a> Context<'a> {
    fn new(problem: &'a NlpProblem, opts: &'a SolverOptions) -> Self {
        let affected = (0..problem.dim)
            .map(|j| {
                problem
                    .constraints
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.deps.as_ref().map_or(true, |d| d.contains(&j)))
                    .map(|(i, _)| i)
                    .collect()
            })
            .collect();
        Context {
            problem,
            opts,
            affected,
        }
    }

    fn eval(&self, x: &[f64]) -> Point {
        Point {
            f: (self.problem.objective)(x),
            c: self.problem.eval_constraints(x),
        }
    }

    fn merit(&self, p: &Point, m: &Multipliers) -> f64 {
        let mut total = p.f;
        let rho = m.rho;
        for ((block, vals), mult) in self.problem.constraints.iter().zip(&p.c).zip(&m.values) {
            for (v, l) in vals.iter().zip(mult) {
                total += match block.kind {
                    ConstraintKind::Equality => l * v + 0.5 * rho * v * v,
                    ConstraintKind::Inequality => {
                        let s = (l + rho * v).max(0.0);
                        (s * s - l * l) / (2.0 * rho)
                    }
                };
            }
        }
        if total.is_nan() {
            f64::INFINITY
        } else {
            total
        }
    }

    fn step(&self, x: &[f64], j: usize) -> f64 {
        let h = self.opts.fd_step * x[j].abs().max(1.0);
        if x[j] + h > self.problem.upper[j] {
            -h
        } else {
            h
        }
    }

    /// Merit gradient assembled from forward differences of the objective and
    /// of each constraint, so the penalty weight never scales truncation error.
    fn gradient(&self, x: &[f64], p: &Point, m: &Multipliers) -> Vec<f64> {
        let weights: Vec<Vec<f64>> = self
            .problem
            .constraints
            .iter()
            .zip(&p.c)
            .zip(&m.values)
            .map(|((block, vals), mult)| {
                vals.iter()
                    .zip(mult)
                    .map(|(v, l)| match block.kind {
                        ConstraintKind::Equality => l + m.rho * v,
                        ConstraintKind::Inequality => (l + m.rho * v).max(0.0),
                    })
                    .collect()
            })
            .collect();
        let mut g = vec![0.0; x.len()];
        let mut xh = x.to_vec();
        for j in 0..x.len() {
            let h = self.step(x, j);
            xh[j] = x[j] + h;
            let h = xh[j] - x[j];
            let mut gj = ((self.problem.objective)(&xh) - p.f) / h;
            for &b in &self.affected[j] {
                let c = (self.problem.constraints[b].eval)(&xh);
                for ((cv, c0), w) in c.iter().zip(&p.c[b]).zip(&weights[b]) {
                    if *w != 0.0 {
                        gj += w * (cv - c0) / h;
                    }
                }
            }
            g[j] = gj;
            xh[j] = x[j];
        }
        g
    }

    /// Gradient with components that push against an active bound removed.
    fn projected(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .enumerate()
            .map(|(j, (v, gj))| {
                let at_lower = *v <= self.problem.lower[j] && *gj > 0.0;
                let at_upper = *v >= self.problem.upper[j] && *gj < 0.0;
                if at_lower || at_upper || !gj.is_finite() {
                    0.0
                } else {
                    *gj
                }
            })
            .collect()
    }

    /// L-BFGS with projection onto the box; returns the final point and
    /// whether a stationarity or stall test fired before the iteration cap.
    fn inner(&self, mut x: Vec<f64>, mut p: Point, m: &Multipliers, rng: &mut ChaCha8Rng) -> (Vec<f64>, Point, bool) {
        let mut val = self.merit(&p, m);
        let mut g = self.gradient(&x, &p, m);
        let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        for _ in 0..self.opts.max_inner_iters {
            let pg = self.projected(&x, &g);
            let pg_norm = pg.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if pg_norm <= self.opts.grad_tol * val.abs().max(1.0) {
                return (x, p, true);
            }
            let mut dir = two_loop(&pg, &memory);
            for (d, q) in dir.iter_mut().zip(&pg) {
                if *q == 0.0 {
                    *d = 0.0;
                }
            }
            if dot(&dir, &pg) >= 0.0 {
                memory.clear();
                dir = pg.iter().map(|v| -v).collect();
            }
            if memory.is_empty() {
                // Unit-free first step.
                let dn = dir.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let xs = x.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
                let k = (0.1 * xs / dn).min(1.0);
                dir.iter_mut().for_each(|d| *d *= k);
            }
            let found = match self.line_search(&x, val, &g, &dir, m) {
                Some(r) => Some(r),
                None if memory.is_empty() => self.sampled_step(&x, val, &g, m, rng),
                None => {
                    memory.clear();
                    continue;
                }
            };
            let Some((xn, pn, vn)) = found else {
                return (x, p, true);
            };
            let gn = self.gradient(&xn, &pn, m);
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
                if memory.len() == self.opts.lbfgs_memory {
                    memory.pop_front();
                }
                memory.push_back((s.clone(), y, 1.0 / sy));
            }
            let stalled = val - vn <= 1e-15 * val.abs().max(1.0)
                && s.iter()
                    .zip(&xn)
                    .all(|(d, v)| d.abs() <= self.opts.step_tol * v.abs().max(1.0));
            x = xn;
            p = pn;
            val = vn;
            g = gn;
            if stalled {
                return (x, p, true);
            }
        }
        (x, p, false)
    }

    /// Fallback for points where the merit has a kink and the local gradient
    /// is not a descent direction: steps along the negated shortest vector in
    /// the hull of gradients sampled around `x`, at shrinking radii.
    fn sampled_step(
        &self,
        x: &[f64],
        val: f64,
        g: &[f64],
        m: &Multipliers,
        rng: &mut ChaCha8Rng,
    ) -> Option<(Vec<f64>, Point, f64)> {
        let count = (x.len() + 1).min(SAMPLES);
        let xs = x.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
        let mut radius = 1e-3 * xs;
        for _ in 0..4 {
            let mut grads = vec![self.projected(x, g)];
            for _ in 0..count {
                let mut xt: Vec<f64> = x.iter().map(|v| v + radius * rng.gen_range(-1.0..=1.0)).collect();
                self.problem.project(&mut xt);
                let pt = self.eval(&xt);
                let gt = self.gradient(&xt, &pt, m);
                if gt.iter().all(|v| v.is_finite()) {
                    grads.push(self.projected(x, &gt));
                }
            }
            let d = min_norm(&grads);
            let dn = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
            if dn > 0.0 {
                let k = radius / dn;
                let dir: Vec<f64> = d.iter().map(|v| -k * v).collect();
                if let Some(r) = self.line_search(x, val, &d, &dir, m) {
                    return Some(r);
                }
            }
            radius *= 0.1;
        }
        None
    }

    fn line_search(
        &self,
        x: &[f64],
        val: f64,
        g: &[f64],
        dir: &[f64],
        m: &Multipliers,
    ) -> Option<(Vec<f64>, Point, f64)> {
        let mut alpha = 1.0;
        for _ in 0..50 {
            let mut xt: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + alpha * d).collect();
            self.problem.project(&mut xt);
            let decrease: f64 = g.iter().zip(xt.iter().zip(x)).map(|(gi, (a, b))| gi * (a - b)).sum();
            if decrease < 0.0 {
                let pt = self.eval(&xt);
                let vt = self.merit(&pt, m);
                if vt <= val + 1e-4 * decrease {
                    return Some((xt, pt, vt));
                }
            } else if xt == x {
                return None;
            }
            alpha *= 0.5;
        }
        None
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Shortest vector in the convex hull of `points`, by Frank-Wolfe on the
/// simplex weights.
fn min_norm(points: &[Vec<f64>]) -> Vec<f64> {
    let k = points.len();
    let gram: Vec<Vec<f64>> = points.iter().map(|a| points.iter().map(|b| dot(a, b)).collect()).collect();
    let mut w = vec![1.0 / k as f64; k];
    for _ in 0..500 {
        // Gradient of |sum w_i p_i|^2 / 2 with respect to w is gram * w.
        let gw: Vec<f64> = gram.iter().map(|row| dot(row, &w)).collect();
        let (i, _) = gw
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |(bi, bv), (i, v)| if *v < bv { (i, *v) } else { (bi, bv) });
        let cur = dot(&w, &gw);
        // Exact line search toward vertex i.
        let gap = cur - gw[i];
        if gap <= 1e-14 * cur.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        let curv = cur - 2.0 * gw[i] + gram[i][i];
        let t = if curv > 0.0 { (gap / curv).min(1.0) } else { 1.0 };
        w.iter_mut().for_each(|v| *v *= 1.0 - t);
        w[i] += t;
    }
    let mut out = vec![0.0; points[0].len()];
    for (p, wi) in points.iter().zip(&w) {
        out.iter_mut().zip(p).for_each(|(o, v)| *o += wi * v);
    }
    out
}

fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, r) in memory.iter().rev() {
        let a = r * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, r), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = r * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

struct Incumbent {
    x: Vec<f64>,
    f: f64,
    viol: f64,
}

impl Incumbent {
    fn offer(&mut self, x: &[f64], p: &Point, viol: f64, tol: f64) {
        let feasible = viol <= tol;
        let was = self.viol <= tol;
        let take = match (feasible, was) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => p.f < self.f,
            (false, false) => viol < self.viol,
        };
        if take {
            self.x = x.to_vec();
            self.f = p.f;
            self.viol = viol;
        }
    }
}

fn run(problem: &NlpProblem, opts: &SolverOptions, x0: Vec<f64>) -> Result<SolverResult> {
    let ctx = Context::new(problem, opts);
    let mut p = ctx.eval(&x0);
    if !p.f.is_finite() {
        return Err(Error::NonFinite { what: "objective at the initial guess".into() });
    }
    if p.c.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "constraints at the initial guess".into() });
    }
    let mut m = Multipliers {
        values: problem.constraints.iter().map(|c| vec![0.0; c.len]).collect(),
        rho: opts.penalty_init,
    };
    let tol = opts.feasibility_tol;
    let mut x = x0;
    let mut viol = violation(&problem.constraints, &p.c);
    let mut best = Incumbent {
        x: x.clone(),
        f: p.f,
        viol,
    };
    let mut trace = Vec::new();
    let mut message = String::from("outer iteration limit reached");
    let mut iterations = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.max_outer_iters {
        iterations += 1;
        let before = ctx.merit(&p, &m);
        let f_prev = p.f;
        let was_feasible = viol <= tol;
        let (xn, pn, settled) = ctx.inner(x.clone(), p, &m, &mut rng);
        let after = ctx.merit(&pn, &m);
        trace.push(MeritStep { before, after });
        let dx = xn
            .iter()
            .zip(&x)
            .all(|(a, b)| (a - b).abs() <= opts.step_tol * a.abs().max(1.0));
        let df = (pn.f - best.f).abs() <= opts.step_tol * pn.f.abs().max(1.0);
        let prev_viol = viol;
        x = xn;
        p = pn;
        viol = violation(&problem.constraints, &p.c);
        best.offer(&x, &p, viol, tol);
        let flat = was_feasible && (p.f - f_prev).abs() <= opts.objective_tol * p.f.abs().max(1.0);
        if viol <= tol && ((settled && (dx || df)) || flat) {
            message = String::from("converged");
            break;
        }
        for ((block, vals), mult) in problem.constraints.iter().zip(&p.c).zip(m.values.iter_mut()) {
            for (v, l) in vals.iter().zip(mult.iter_mut()) {
                *l = match block.kind {
                    ConstraintKind::Equality => *l + m.rho * v,
                    ConstraintKind::Inequality => (*l + m.rho * v).max(0.0),
                };
            }
        }
        if viol > tol && viol > 0.25 * prev_viol {
            m.rho = (m.rho * opts.penalty_growth).min(opts.penalty_max);
        }
    }
    let max_violation = problem.max_violation(&best.x);
    let feasible = max_violation <= tol;
    if !feasible && message == "converged" {
        message = String::from("stopped without reaching feasibility");
    }
    Ok(SolverResult {
        objective: (problem.objective)(&best.x),
        trajectories: problem.trajectories(&best.x),
        x: best.x,
        feasible,
        max_violation,
        iterations,
        merit_trace: trace,
        message,
    })
}

/// Largest discrepancy between the solver's forward-difference objective
/// gradient and a central-difference reference at the same step, relative to
/// `max(|g|, 1)` per component.
pub fn check_gradient(problem: &NlpProblem, x: &[f64], opts: &SolverOptions) -> Result<f64> {
    if x.len() != problem.dim {
        return Err(Error::DimensionMismatch {
            expected: problem.dim,
            found: x.len(),
        });
    }
    let f = |v: &[f64]| (problem.objective)(v);
    let f0 = f(x);
    if !f0.is_finite() {
        return Err(Error::NonFinite { what: "objective".into() });
    }
    let mut worst = 0.0_f64;
    let mut xh = x.to_vec();
    for j in 0..x.len() {
        let h = opts.fd_step * x[j].abs().max(1.0);
        xh[j] = x[j] + h;
        let fp = f(&xh);
        xh[j] = x[j] - h;
        let fm = f(&xh);
        xh[j] = x[j];
        let forward = (fp - f0) / h;
        let central = (fp - fm) / (2.0 * h);
        worst = worst.max((forward - central).abs() / central.abs().max(1.0));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unconstrained_quadratic() {
        let p = NlpProblem::new(vec![3.0, 4.0], |x| x[0] * x[0] + x[1] * x[1]);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert!(r.x.iter().all(|v| v.abs() <= 1e-4), "{r:?}");
        assert!(r.feasible);
    }

    #[test]
    fn active_inequality() {
        let p = NlpProblem::new(vec![5.0], |x| x[0]).inequality("x>=1", |x| 1.0 - x[0]);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert!((r.x[0] - 1.0).abs() <= 1e-4, "{r:?}");
    }

    #[test]
    fn equality_constraint() {
        let p = NlpProblem::new(vec![0.0, 0.0], |x| x[0] * x[0] + 2.0 * x[1] * x[1])
            .equality("sum", |x| x[0] + x[1] - 3.0);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{r:?}");
    }

    #[test]
    fn box_bound() {
        let p = NlpProblem::new(vec![2.0], |x| (x[0] + 1.0).powi(2)).with_bounds(vec![0.5], vec![3.0]);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert_eq!(r.x[0], 0.5);
    }

    #[test]
    fn merit_never_increases_within_an_outer_step() {
        let p = NlpProblem::new(vec![-1.2, 1.0], |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2))
            .inequality("disk", |x| x[0] * x[0] + x[1] * x[1] - 1.5);
        let r = solve(&p, &SolverOptions::default()).unwrap();
        assert!(!r.merit_trace.is_empty());
        assert!(r.merit_trace.iter().all(|s| s.after <= s.before));
    }

    #[test]
    fn non_finite_start_is_rejected() {
        let p = NlpProblem::new(vec![0.0], |x| 1.0 / x[0]);
        assert!(solve(&p, &SolverOptions::default()).is_err());
    }

    #[test]
    fn gradient_check() {
        let p = NlpProblem::new(vec![0.0; 2], |x| x[0] * x[0] + 3.0 * x[1] * x[1]);
        assert!(check_gradient(&p, &[3.0, 4.0], &SolverOptions::default()).unwrap() <= 1e-6);
        let c = NlpProblem::new(vec![0.0; 2], |_| 7.0);
        assert_eq!(check_gradient(&c, &[1.0, 2.0], &SolverOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn options_round_trip_and_validation() {
        let o: SolverOptions = serde_json::from_str(r#"{"max_outer_iters": 5}"#).unwrap();
        assert_eq!(o.max_outer_iters, 5);
        assert_eq!(o.feasibility_tol, 1e-6);
        let bad = SolverOptions {
            penalty_growth: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(serde_json::from_str::<SolverOptions>(r#"{"bogus": 1}"#).is_err());
    }
}

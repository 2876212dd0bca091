use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{Enforcement, Obstacle, ScenarioConfig, ScenarioKind, SwarmCost, VehicleSpec};
use crate::error::{Error, Result};
use crate::geom::{
    gjk_distance, maximum, min_distance_to_shape, ConvexPointSet, DistanceQuery, ExtremaQuery,
};
use crate::kinematics::{angular_rate_parts, obstacle_poly, speed_squared, squared_distance};
use crate::poly::BernsteinPoly;
use crate::problem::{ConstraintKind, Layout, LayoutSlice, NlpProblem, SliceKind};

/// Shortest final time the decoder will produce.
pub const MIN_FINAL_TIME: f64 = 0.1;

const SMOOTHING: f64 = 1e-12;
const RECIPROCAL_DELTA: f64 = 1e-6;

/// Direction of a scalar bound on a 1-D polynomial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    UpperBound(f64),
    LowerBound(f64),
}

/// Number of scalars [`reduce_constraint`] yields for a polynomial of `degree`.
pub fn reduced_len(degree: usize, mode: &Enforcement) -> usize {
    match mode {
        Enforcement::Hull { elevate_to } => (*elevate_to).max(degree) + 1,
        Enforcement::Extrema { .. } => 1,
    }
}

/// Turns a continuous-time bound on a 1-D polynomial into scalars `g <= 0`.
pub fn reduce_constraint(poly: &BernsteinPoly, mode: &Enforcement, sense: Sense) -> Result<Vec<f64>> {
    if poly.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: poly.dim(),
        });
    }
    mode.validate()?;
    if poly.as_flat().iter().any(|v| !v.is_finite()) {
        return Ok(vec![f64::INFINITY; reduced_len(poly.degree(), mode)]);
    }
    match (mode, sense) {
        (Enforcement::Hull { elevate_to }, sense) => {
            let m = (*elevate_to).max(poly.degree());
            let e = poly.elevate(m)?;
            Ok(match sense {
                Sense::UpperBound(c) => e.as_flat().iter().map(|v| v - c).collect(),
                Sense::LowerBound(c) => e.as_flat().iter().map(|v| c - v).collect(),
            })
        }
        (Enforcement::Extrema { epsilon }, sense) => {
            let q = ExtremaQuery::with_epsilon(*epsilon);
            Ok(vec![match sense {
                Sense::UpperBound(c) => polished_max(poly, &q)? - c,
                Sense::LowerBound(c) => c + polished_max(&poly.scale(-1.0), &q)?,
            }])
        }
    }
}

/// Branch-and-bound maximum refined by Newton steps on the derivative, so the
/// value varies smoothly with the coefficients instead of jittering within
/// the search tolerance.
fn polished_max(poly: &BernsteinPoly, q: &ExtremaQuery) -> Result<f64> {
    let e = maximum(poly, q)?;
    let Some(mut t) = e.location else {
        return Ok(e.estimate);
    };
    if poly.degree() < 2 {
        return Ok(e.estimate);
    }
    let d1 = poly.derivative();
    let d2 = d1.derivative();
    let scale = poly.tf() - poly.t0();
    for _ in 0..20 {
        let (Ok(g), Ok(h)) = (d1.evaluate(t), d2.evaluate(t)) else {
            return Ok(e.estimate);
        };
        if !(h[0] < 0.0) {
            return Ok(e.estimate);
        }
        let step = g[0] / h[0];
        t -= step;
        if step.abs() <= 1e-15 * scale {
            break;
        }
    }
    match poly.evaluate(t) {
        Ok(v) if v[0] >= e.estimate - q.epsilon => Ok(v[0]),
        _ => Ok(e.estimate),
    }
}

#[derive(Debug, Clone, Copy)]
enum FinalTime {
    Fixed(f64),
    Free { index: usize, scale: f64 },
}

#[derive(Debug, Clone)]
struct VehicleModel {
    spec: VehicleSpec,
    vars: Range<usize>,
    tf: FinalTime,
}

/// Maps the decision vector to trajectories. Boundary conditions are built in.
#[derive(Debug, Clone)]
pub(crate) struct Model {
    dim: usize,
    n: usize,
    length: f64,
    headings: bool,
    vehicles: Vec<VehicleModel>,
    size: usize,
}

impl Model {
    fn new(cfg: &ScenarioConfig, specs: &[VehicleSpec]) -> Self {
        let dim = cfg.dim();
        let n = cfg.degree;
        let headings = cfg.kind.has_headings();
        let free_points = if headings { n - 3 } else { n - 1 };
        let length = specs
            .iter()
            .flat_map(|v| v.start.iter().chain(&v.end))
            .fold(1.0_f64, |m, x| m.max(x.abs()));
        let mut next = 0;
        let mut vehicles = Vec::with_capacity(specs.len());
        for spec in specs {
            let vars = next..next + dim * free_points;
            next = vars.end;
            let tf = match cfg.tf {
                Some(tf) => FinalTime::Fixed(tf),
                None => {
                    let index = next;
                    next += 1;
                    FinalTime::Free {
                        index,
                        scale: tf_guess(spec, cfg),
                    }
                }
            };
            vehicles.push(VehicleModel {
                spec: spec.clone(),
                vars,
                tf,
            });
        }
        Model {
            dim,
            n,
            length,
            headings,
            vehicles,
            size: next,
        }
    }

    fn tf(&self, k: usize, z: &[f64]) -> f64 {
        match self.vehicles[k].tf {
            FinalTime::Fixed(tf) => tf,
            FinalTime::Free { index, scale } => (scale * z[index]).max(MIN_FINAL_TIME),
        }
    }

    /// Indices of the variables vehicle `k` reads.
    fn vars(&self, k: usize) -> Vec<usize> {
        let v = &self.vehicles[k];
        let mut out: Vec<usize> = v.vars.clone().collect();
        if let FinalTime::Free { index, .. } = v.tf {
            out.push(index);
        }
        out
    }

    pub(crate) fn decode(&self, k: usize, z: &[f64]) -> BernsteinPoly {
        let v = &self.vehicles[k];
        let (d, n) = (self.dim, self.n);
        let tf = self.tf(k, z);
        let mut data = Vec::with_capacity(d * (n + 1));
        data.extend_from_slice(&v.spec.start);
        let free = z[v.vars.clone()].iter().map(|x| x * self.length);
        match v.spec.boundary().filter(|_| self.headings) {
            Some((psi0, psif, v0, vf)) => {
                let (a, b) = (tf * v0 / n as f64, tf * vf / n as f64);
                data.push(v.spec.start[0] + a * psi0.cos());
                data.push(v.spec.start[1] + a * psi0.sin());
                data.extend(free);
                data.push(v.spec.end[0] - b * psif.cos());
                data.push(v.spec.end[1] - b * psif.sin());
            }
            None => data.extend(free),
        }
        data.extend_from_slice(&v.spec.end);
        BernsteinPoly::from_flat(d, data, 0.0, tf).expect("decoded layout is consistent")
    }

    fn decode_all(&self, z: &[f64]) -> Vec<BernsteinPoly> {
        (0..self.vehicles.len()).map(|k| self.decode(k, z)).collect()
    }

    fn layout(&self) -> Layout {
        let mut slices = Vec::new();
        for (k, v) in self.vehicles.iter().enumerate() {
            slices.push(LayoutSlice {
                vehicle: k,
                kind: SliceKind::Coefficients,
                range: v.vars.clone(),
            });
            if let FinalTime::Free { index, .. } = v.tf {
                slices.push(LayoutSlice {
                    vehicle: k,
                    kind: SliceKind::FinalTime,
                    range: index..index + 1,
                });
            }
        }
        Layout { slices }
    }

    /// Straight-line control points and the final-time guesses.
    fn initial_guess(&self, offsets: bool) -> Vec<f64> {
        let mut z = vec![0.0; self.size];
        let first = if self.headings { 2 } else { 1 };
        for (k, v) in self.vehicles.iter().enumerate() {
            let free = v.vars.len() / self.dim;
            for j in 0..free {
                let i = first + j;
                let s = i as f64 / self.n as f64;
                let bump = (std::f64::consts::PI * s).sin();
                let angle = 2.399963 * (k + 1) as f64;
                for d in 0..self.dim {
                    let mut p = v.spec.start[d] + s * (v.spec.end[d] - v.spec.start[d]);
                    if offsets && d < 2 {
                        let dir = if d == 0 { angle.cos() } else { angle.sin() };
                        p += 0.01 * self.length * bump * dir;
                    }
                    z[v.vars.start + j * self.dim + d] = p / self.length;
                }
            }
            if let FinalTime::Free { index, .. } = v.tf {
                z[index] = 1.0;
            }
        }
        z
    }

    fn bounds(&self, cfg: &ScenarioConfig) -> (Vec<f64>, Vec<f64>) {
        let mut lower = vec![f64::NEG_INFINITY; self.size];
        let mut upper = vec![f64::INFINITY; self.size];
        if let Some(margin) = cfg.workspace_margin {
            let mut lo = vec![f64::INFINITY; self.dim];
            let mut hi = vec![f64::NEG_INFINITY; self.dim];
            for v in &cfg.vehicles {
                for p in [&v.start, &v.end] {
                    for d in 0..self.dim {
                        lo[d] = lo[d].min(p[d]);
                        hi[d] = hi[d].max(p[d]);
                    }
                }
            }
            for v in &self.vehicles {
                for (j, i) in v.vars.clone().enumerate() {
                    let d = j % self.dim;
                    lower[i] = (lo[d] - margin) / self.length;
                    upper[i] = (hi[d] + margin) / self.length;
                }
            }
        }
        for v in &self.vehicles {
            if let FinalTime::Free { index, scale } = v.tf {
                lower[index] = MIN_FINAL_TIME / scale;
            }
        }
        (lower, upper)
    }
}

fn tf_guess(spec: &VehicleSpec, cfg: &ScenarioConfig) -> f64 {
    let mean = match spec.boundary() {
        Some((_, _, v0, vf)) => 0.5 * (v0 + vf),
        None => 0.0,
    };
    let speed = cfg.limits.v_max.map_or(mean, |v| mean.max(0.5 * v));
    let t = if speed > 0.0 { spec.distance() / speed } else { spec.distance() };
    t.max(1.0)
}

/// Restricts `p` to `[t0, t]` when `t` ends before `p` does.
pub(crate) fn restrict(p: &BernsteinPoly, t: f64) -> BernsteinPoly {
    if t >= p.tf() {
        return p.clone();
    }
    match p.split(t) {
        Ok((left, _)) => left,
        Err(_) => p.clone(),
    }
}

/// `|a - b|^2` over the span both curves are defined on.
pub(crate) fn overlap_distance(a: &BernsteinPoly, b: &BernsteinPoly) -> Result<BernsteinPoly> {
    let t = a.tf().min(b.tf());
    let (ra, rb) = (restrict(a, t), restrict(b, t));
    // The two restricted intervals agree up to rounding in the split.
    let rb = rb.with_interval(ra.t0(), ra.tf())?;
    squared_distance(&ra, &rb)
}

/// Clearance radius for an obstacle.
pub(crate) fn clearance(o: &Obstacle, cfg: &ScenarioConfig) -> f64 {
    match o {
        Obstacle::Circle { radius, .. } => radius + cfg.d_obs,
        Obstacle::Hull { .. } => cfg.d_obs,
    }
}

fn arc_length(p: &BernsteinPoly) -> f64 {
    let d = p.dim();
    let pts = p.as_flat();
    (0..p.degree())
        .map(|i| {
            let s: f64 = (0..d).map(|c| (pts[(i + 1) * d + c] - pts[i * d + c]).powi(2)).sum();
            (s + SMOOTHING).sqrt()
        })
        .sum()
}

/// Control-polygon length, smoothed at coincident control points.
pub fn arc_length_surrogate(trajectories: &[BernsteinPoly]) -> f64 {
    trajectories.iter().map(arc_length).sum()
}

struct Builder<'a> {
    cfg: &'a ScenarioConfig,
    model: Arc<Model>,
    problem: NlpProblem,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a ScenarioConfig, specs: &[VehicleSpec], offsets: bool) -> Self {
        let model = Arc::new(Model::new(cfg, specs));
        let guess = model.initial_guess(offsets);
        let (lower, upper) = model.bounds(cfg);
        let decoder = Arc::clone(&model);
        let mut problem = NlpProblem::new(guess, |_| 0.0).with_bounds(lower, upper);
        problem.layout = model.layout();
        problem.decode = Some(Arc::new(move |z: &[f64]| decoder.decode_all(z)));
        Builder { cfg, model, problem }
    }

    fn objective(&mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) {
        self.problem.objective = Arc::new(f);
    }

    fn min_time_objective(&mut self) {
        let model = Arc::clone(&self.model);
        let total: f64 = model
            .vehicles
            .iter()
            .map(|v| match v.tf {
                FinalTime::Free { scale, .. } => scale,
                FinalTime::Fixed(_) => 0.0,
            })
            .sum();
        self.objective(move |z| (0..model.vehicles.len()).map(|k| model.tf(k, z)).sum::<f64>() / total);
    }

    fn arc_length_objective(&mut self) {
        let model = Arc::clone(&self.model);
        let scale: f64 = model
            .vehicles
            .iter()
            .map(|v| v.spec.distance())
            .sum::<f64>()
            .max(model.length * 1e-3);
        self.objective(move |z| {
            (0..model.vehicles.len())
                .map(|k| arc_length(&model.decode(k, z)))
                .sum::<f64>()
                / scale
        });
    }

    fn block(
        &mut self,
        name: String,
        len: usize,
        deps: Vec<usize>,
        f: impl Fn(&[f64]) -> Result<Vec<f64>> + Send + Sync + 'static,
    ) {
        self.problem.push_constraint(name, ConstraintKind::Inequality, len, Some(deps), move |z| {
            f(z).unwrap_or_else(|_| vec![f64::INFINITY; len])
        });
    }

    fn vehicle_blocks(&mut self, k: usize) {
        let cfg = self.cfg;
        let n = cfg.degree;
        let mode = cfg.enforcement;
        let tight = cfg.tighten;
        let deps = self.model.vars(k);
        if let Some(v_max) = cfg.limits.v_max {
            let model = Arc::clone(&self.model);
            let k2 = v_max * v_max;
            self.block(format!("speed_max[{k}]"), reduced_len(2 * n - 2, &mode), deps.clone(), move |z| {
                let v = speed_squared(&model.decode(k, z))?.scale(1.0 / k2);
                reduce_constraint(&v, &mode, Sense::UpperBound(1.0 - tight))
            });
        }
        if let Some(v_min) = cfg.limits.v_min.filter(|v| *v > 0.0) {
            let model = Arc::clone(&self.model);
            let k2 = v_min * v_min;
            self.block(format!("speed_min[{k}]"), reduced_len(2 * n - 2, &mode), deps.clone(), move |z| {
                let v = speed_squared(&model.decode(k, z))?.scale(1.0 / k2);
                reduce_constraint(&v, &mode, Sense::LowerBound(1.0 + tight))
            });
        }
        if let (Some(w), Some(v_max)) = (cfg.limits.omega_max, cfg.limits.v_max) {
            let model = Arc::clone(&self.model);
            let norm = 1.0 / (w * v_max * v_max);
            let each = reduced_len(2 * n - 2, &mode);
            self.block(format!("turn_rate[{k}]"), 2 * each, deps.clone(), move |z| {
                let (num, den) = angular_rate_parts(&model.decode(k, z))?;
                let slack = den.scale(w * (1.0 - tight));
                let mut out = reduce_constraint(&num.sub(&slack)?.scale(norm), &mode, Sense::UpperBound(0.0))?;
                out.extend(reduce_constraint(
                    &num.scale(-1.0).sub(&slack)?.scale(norm),
                    &mode,
                    Sense::UpperBound(0.0),
                )?);
                Ok(out)
            });
        }
        for (j, obstacle) in cfg.obstacles.iter().enumerate() {
            let r = clearance(obstacle, cfg);
            if r <= 0.0 {
                continue;
            }
            let model = Arc::clone(&self.model);
            let name = format!("obstacle[{k}][{j}]");
            match obstacle.clone() {
                Obstacle::Circle { center, .. } => {
                    let r2 = r * r;
                    self.block(name, reduced_len(2 * n, &mode), deps.clone(), move |z| {
                        let traj = model.decode(k, z);
                        let o = obstacle_poly(&center, n, 0.0, traj.tf())?;
                        let d2 = squared_distance(&traj, &o)?.scale(1.0 / r2);
                        reduce_constraint(&d2, &mode, Sense::LowerBound(1.0 + tight))
                    });
                }
                Obstacle::Hull { points } => {
                    self.block(name, 1, deps.clone(), move |z| {
                        let traj = model.decode(k, z);
                        let d = shape_distance(&traj, &points, &mode)?;
                        Ok(vec![1.0 + tight - d / r])
                    });
                }
            }
        }
    }

    fn pair_block(&mut self, i: usize, j: usize) {
        let cfg = self.cfg;
        let mode = cfg.enforcement;
        let tight = cfg.tighten;
        let model = Arc::clone(&self.model);
        let s2 = cfg.d_s * cfg.d_s;
        let mut deps = self.model.vars(i);
        deps.extend(self.model.vars(j));
        self.block(format!("separation[{i},{j}]"), reduced_len(2 * cfg.degree, &mode), deps, move |z| {
            let d2 = overlap_distance(&model.decode(i, z), &model.decode(j, z))?.scale(1.0 / s2);
            reduce_constraint(&d2, &mode, Sense::LowerBound(1.0 + tight))
        });
    }

    /// Separation of vehicle 0 of this model from an already planned curve.
    fn fixed_pair_block(&mut self, j: usize, other: BernsteinPoly) {
        let cfg = self.cfg;
        let mode = cfg.enforcement;
        let tight = cfg.tighten;
        let model = Arc::clone(&self.model);
        let s2 = cfg.d_s * cfg.d_s;
        let deps = self.model.vars(0);
        self.block(format!("separation[{j}]"), reduced_len(2 * cfg.degree, &mode), deps, move |z| {
            let d2 = overlap_distance(&model.decode(0, z), &other)?.scale(1.0 / s2);
            reduce_constraint(&d2, &mode, Sense::LowerBound(1.0 + tight))
        });
    }

    fn finish(self) -> NlpProblem {
        self.problem
    }
}

fn shape_distance(traj: &BernsteinPoly, shape: &ConvexPointSet, mode: &Enforcement) -> Result<f64> {
    match mode {
        Enforcement::Hull { elevate_to } => {
            let e = traj.elevate((*elevate_to).max(traj.degree()))?;
            let hull = ConvexPointSet::from_flat(e.dim(), e.as_flat().to_vec())?;
            gjk_distance(&hull, shape, 1e-9)
        }
        Enforcement::Extrema { epsilon } => Ok(min_distance_to_shape(traj, shape, &DistanceQuery::with_epsilon(*epsilon))?.value),
    }
}

fn require(cfg: &ScenarioConfig, kind: ScenarioKind) -> Result<()> {
    if cfg.kind != kind {
        return Err(Error::config(format!(
            "expected a {kind:?} scenario, got {:?}",
            cfg.kind
        )));
    }
    cfg.validate()?;
    if cfg.vehicles.is_empty() {
        return Err(Error::config("resolve the swarm layout before transcribing"));
    }
    Ok(())
}

fn joint(cfg: &ScenarioConfig, time_optimal: bool) -> NlpProblem {
    let mut b = Builder::new(cfg, &cfg.vehicles, false);
    if time_optimal {
        b.min_time_objective();
    } else {
        b.arc_length_objective();
    }
    let m = cfg.vehicles.len();
    for k in 0..m {
        b.vehicle_blocks(k);
    }
    if cfg.d_s > 0.0 {
        for i in 0..m {
            for j in i + 1..m {
                b.pair_block(i, j);
            }
        }
    }
    b.finish()
}

/// Minimum-time single vehicle among point obstacles.
pub fn transcribe_dubins(cfg: &ScenarioConfig) -> Result<NlpProblem> {
    require(cfg, ScenarioKind::Dubins)?;
    Ok(joint(cfg, true))
}

/// Several aircraft minimizing the sum of their final times.
pub fn transcribe_atc(cfg: &ScenarioConfig) -> Result<NlpProblem> {
    require(cfg, ScenarioKind::Atc)?;
    Ok(joint(cfg, true))
}

/// Fixed-time vehicles minimizing control-polygon length among obstacles.
pub fn transcribe_cluttered(cfg: &ScenarioConfig) -> Result<NlpProblem> {
    require(cfg, ScenarioKind::Cluttered)?;
    Ok(joint(cfg, false))
}

/// All swarm vehicles in one problem.
pub fn transcribe_swarm_centralized(cfg: &ScenarioConfig) -> Result<NlpProblem> {
    require(cfg, ScenarioKind::SwarmCentralized)?;
    Ok(joint(cfg, false))
}

/// Vehicle `i` of a decentralized swarm against the curves already planned
/// for vehicles `0..i`.
pub fn transcribe_swarm_vehicle(cfg: &ScenarioConfig, i: usize, planned: &[BernsteinPoly]) -> Result<NlpProblem> {
    require(cfg, ScenarioKind::SwarmDecentralized)?;
    if i >= cfg.vehicles.len() || planned.len() != i {
        return Err(Error::config(format!(
            "vehicle {i} needs exactly {i} planned predecessors, got {}",
            planned.len()
        )));
    }
    let mut b = Builder::new(cfg, std::slice::from_ref(&cfg.vehicles[i]), true);
    match cfg.cost {
        SwarmCost::Reciprocal if i > 0 => {
            let model = Arc::clone(&b.model);
            let others = planned.to_vec();
            // Coefficient count times L^2 keeps the cost near 1 for straight lines.
            let scale = (others.len() * (2 * cfg.degree + 1)) as f64 * model.length * model.length;
            b.objective(move |z| {
                let own = model.decode(0, z);
                let total: f64 = others
                    .iter()
                    .map(|o| {
                        overlap_distance(&own, o)
                            .map(|d| d.as_flat().iter().sum::<f64>())
                            .unwrap_or(f64::NAN)
                    })
                    .sum();
                scale / (RECIPROCAL_DELTA * scale + total)
            });
        }
        _ => b.arc_length_objective(),
    }
    b.vehicle_blocks(0);
    if cfg.cost == SwarmCost::ArcLength && cfg.d_s > 0.0 {
        for (j, other) in planned.iter().enumerate() {
            b.fixed_pair_block(j, other.clone());
        }
    }
    Ok(b.finish())
}

/// Dispatches on the scenario kind; decentralized swarms are planned vehicle
/// by vehicle instead.
pub fn transcribe(cfg: &ScenarioConfig) -> Result<NlpProblem> {
    match cfg.kind {
        ScenarioKind::Dubins => transcribe_dubins(cfg),
        ScenarioKind::Atc => transcribe_atc(cfg),
        ScenarioKind::Cluttered => transcribe_cluttered(cfg),
        ScenarioKind::SwarmCentralized => transcribe_swarm_centralized(cfg),
        ScenarioKind::SwarmDecentralized => Err(Error::config(
            "decentralized swarms are transcribed one vehicle at a time",
        )),
    }
}

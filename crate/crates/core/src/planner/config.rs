use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{ConvexPointSet, DEFAULT_EXTREMA_EPSILON};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Dubins,
    Atc,
    Cluttered,
    SwarmCentralized,
    SwarmDecentralized,
}

impl ScenarioKind {
    /// Whether the kind minimizes final time (free `tf`).
    pub fn free_final_time(self) -> bool {
        matches!(self, ScenarioKind::Dubins | ScenarioKind::Atc)
    }

    /// Whether boundary headings and speeds are part of the problem.
    pub fn has_headings(self) -> bool {
        matches!(self, ScenarioKind::Dubins | ScenarioKind::Atc | ScenarioKind::Cluttered)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psif: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vf: Option<f64>,
}

impl VehicleSpec {
    pub fn new(start: Vec<f64>, end: Vec<f64>) -> Self {
        VehicleSpec {
            start,
            end,
            psi0: None,
            psif: None,
            v0: None,
            vf: None,
        }
    }

    pub fn with_boundary(mut self, psi0: f64, psif: f64, v0: f64, vf: f64) -> Self {
        self.psi0 = Some(psi0);
        self.psif = Some(psif);
        self.v0 = Some(v0);
        self.vf = Some(vf);
        self
    }

    pub fn distance(&self) -> f64 {
        self.start
            .iter()
            .zip(&self.end)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// `(psi0, psif, v0, vf)` when all four are given.
    pub fn boundary(&self) -> Option<(f64, f64, f64, f64)> {
        Some((self.psi0?, self.psif?, self.v0?, self.vf?))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_max: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Obstacle {
    /// Disc or ball; `radius` 0 is a point.
    Circle {
        center: Vec<f64>,
        #[serde(default)]
        radius: f64,
    },
    /// Convex hull of a point set.
    Hull { points: ConvexPointSet },
}

impl Obstacle {
    pub fn dim(&self) -> usize {
        match self {
            Obstacle::Circle { center, .. } => center.len(),
            Obstacle::Hull { points } => points.dim(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Enforcement {
    /// One constraint per coefficient after elevating to at least `elevate_to`.
    Hull { elevate_to: usize },
    /// One constraint per curve from the branch-and-bound extremum.
    Extrema {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
}

fn default_epsilon() -> f64 {
    DEFAULT_EXTREMA_EPSILON
}

impl Enforcement {
    pub fn validate(&self) -> Result<()> {
        match self {
            Enforcement::Hull { .. } => Ok(()),
            Enforcement::Extrema { epsilon } if *epsilon > 0.0 => Ok(()),
            Enforcement::Extrema { epsilon } => Err(Error::config(format!(
                "extrema epsilon must be positive, got {epsilon}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwarmCost {
    /// Control polygon length with hard separation constraints.
    #[default]
    ArcLength,
    /// Reciprocal of the summed squared-distance coefficients to earlier
    /// vehicles, endpoint constraints only.
    Reciprocal,
}

/// Seeded endpoint generator: starts on a square lattice at `z = 0`, goals on
/// a ring at `z = altitude`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwarmLayout {
    pub count: usize,
    pub grid_size: f64,
    pub spacing: f64,
    pub ring_radius: f64,
    pub altitude: f64,
}

impl SwarmLayout {
    pub fn generate(&self, seed: u64) -> Result<Vec<VehicleSpec>> {
        if !(self.spacing > 0.0 && self.grid_size >= 0.0) {
            return Err(Error::config("swarm lattice needs positive spacing"));
        }
        let per_side = (self.grid_size / self.spacing).floor() as usize + 1;
        if per_side * per_side < self.count {
            return Err(Error::config(format!(
                "a {}x{} lattice cannot hold {} vehicles",
                per_side, per_side, self.count
            )));
        }
        let mut cells: Vec<(usize, usize)> = (0..per_side)
            .flat_map(|i| (0..per_side).map(move |j| (i, j)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        cells.shuffle(&mut rng);
        let centre = self.grid_size / 2.0;
        Ok(cells
            .into_iter()
            .take(self.count)
            .enumerate()
            .map(|(k, (i, j))| {
                let angle = std::f64::consts::TAU * k as f64 / self.count as f64;
                VehicleSpec::new(
                    vec![i as f64 * self.spacing, j as f64 * self.spacing, 0.0],
                    vec![
                        centre + self.ring_radius * angle.cos(),
                        centre + self.ring_radius * angle.sin(),
                        self.altitude,
                    ],
                )
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub degree: usize,
    #[serde(default)]
    pub vehicles: Vec<VehicleSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swarm: Option<SwarmLayout>,
    #[serde(default)]
    pub limits: Limits,
    #[serde(default)]
    pub d_s: f64,
    #[serde(default)]
    pub d_obs: f64,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    /// Fixed final time; absent when the final time is optimized.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tf: Option<f64>,
    pub enforcement: Enforcement,
    #[serde(default)]
    pub cost: SwarmCost,
    /// Relative tightening applied to every normalized constraint, so that
    /// solver-feasible points satisfy the nominal limits strictly.
    #[serde(default = "default_tighten")]
    pub tighten: f64,
    /// Optional box around the endpoints, per axis, on free coefficients.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workspace_margin: Option<f64>,
    /// Extrema mode runs a hull-bounds pass first and warm-starts from it.
    #[serde(default = "default_true")]
    pub two_phase: bool,
    /// Elevations of the hull-bounds passes, in order; empty means a single
    /// pass at the curve degree.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warm_up: Vec<usize>,
}

fn default_tighten() -> f64 {
    1e-4
}

fn default_true() -> bool {
    true
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Fills `vehicles` from the swarm generator, if one is configured.
    pub fn resolve(&self, seed: u64) -> Result<Self> {
        let mut out = self.clone();
        if let Some(layout) = &self.swarm {
            if !self.vehicles.is_empty() {
                return Err(Error::config("give either vehicles or a swarm layout, not both"));
            }
            out.vehicles = layout.generate(seed)?;
            out.swarm = None;
        }
        out.validate()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.vehicles.first().map_or(0, |v| v.start.len())
    }

    pub fn with_enforcement(&self, enforcement: Enforcement) -> Self {
        ScenarioConfig {
            enforcement,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.enforcement.validate()?;
        if self.vehicles.is_empty() {
            if self.swarm.is_some() {
                return Ok(());
            }
            return Err(Error::config("scenario has no vehicles"));
        }
        let dim = self.dim();
        if !(1..=3).contains(&dim) {
            return Err(Error::config(format!("positions must have 1 to 3 components, got {dim}")));
        }
        let heading = self.kind.has_headings();
        if heading && dim != 2 {
            return Err(Error::config("heading constraints need planar vehicles"));
        }
        if heading && self.degree < 3 {
            return Err(Error::config("boundary headings and speeds need degree >= 3"));
        }
        if self.degree < 1 {
            return Err(Error::config("degree must be at least 1"));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        for (k, v) in self.vehicles.iter().enumerate() {
            if v.start.len() != dim || v.end.len() != dim || !finite(&v.start) || !finite(&v.end) {
                return Err(Error::config(format!("vehicle {k} has malformed endpoints")));
            }
            if heading {
                let (_, _, v0, vf) = v.boundary().ok_or_else(|| {
                    Error::config(format!("vehicle {k} needs psi0, psif, v0 and vf"))
                })?;
                if !(v0 >= 0.0 && vf >= 0.0) {
                    return Err(Error::config(format!("vehicle {k} has a negative boundary speed")));
                }
                if v.distance() == 0.0 && (v0 > 0.0 || vf > 0.0) {
                    return Err(Error::config(format!(
                        "vehicle {k} starts where it ends with nonzero speed"
                    )));
                }
            }
        }
        let l = &self.limits;
        for (name, v) in [("v_min", l.v_min), ("v_max", l.v_max), ("omega_max", l.omega_max)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(Error::config(format!("{name} must be finite and nonnegative")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (l.v_min, l.v_max) {
            if !(hi > lo) {
                return Err(Error::config("v_max must exceed v_min"));
            }
        }
        if l.v_min.is_some_and(|v| v > 0.0) && l.v_max.is_none() {
            return Err(Error::config("v_min needs v_max for normalization"));
        }
        if l.omega_max.is_some() {
            if !heading {
                return Err(Error::config("turn-rate limits apply to planar heading scenarios"));
            }
            if !l.omega_max.is_some_and(|w| w > 0.0) || l.v_max.is_none() {
                return Err(Error::config("omega_max must be positive and needs v_max"));
            }
        }
        if !(self.d_s >= 0.0 && self.d_obs >= 0.0) {
            return Err(Error::config("safety distances must be nonnegative"));
        }
        if !(self.tighten >= 0.0 && self.tighten < 0.5) {
            return Err(Error::config("tighten must lie in [0, 0.5)"));
        }
        for o in &self.obstacles {
            if o.dim() != dim {
                return Err(Error::config("obstacle dimension differs from vehicle dimension"));
            }
            if let Obstacle::Circle { radius, .. } = o {
                if !(*radius >= 0.0) {
                    return Err(Error::config("obstacle radius must be nonnegative"));
                }
            }
        }
        match (self.kind.free_final_time(), self.tf) {
            (true, Some(_)) => {
                return Err(Error::config("this scenario optimizes the final time; remove tf"))
            }
            (false, None) => return Err(Error::config("this scenario needs a fixed tf")),
            (false, Some(tf)) if !(tf > 0.0 && tf.is_finite()) => {
                return Err(Error::config("tf must be positive"))
            }
            _ => {}
        }
        if let Some(m) = self.workspace_margin {
            if !(m >= 0.0) {
                return Err(Error::config("workspace_margin must be nonnegative"));
            }
        }
        Ok(())
    }
}

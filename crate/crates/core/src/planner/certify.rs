use serde::{Deserialize, Serialize};

use super::config::{Obstacle, ScenarioConfig, ScenarioKind, SwarmCost};
use super::transcribe::{clearance, overlap_distance};
use crate::error::{Error, Result};
use crate::geom::{maximum, min_distance_to_shape, minimum, DistanceQuery, ExtremaQuery};
use crate::kinematics::{angular_rate_parts, obstacle_poly, speed_squared, squared_distance};
use crate::poly::BernsteinPoly;

pub const DEFAULT_CERTIFY_EPSILON: f64 = 1e-7;

/// Worst case of one constraint over the whole horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Margin {
    pub constraint: String,
    pub vehicles: Vec<usize>,
    /// Normalized slack; negative means violated.
    pub margin: f64,
    /// Certified worst value in physical units (or normalized, for turn rate).
    pub value: f64,
    pub limit: f64,
    /// A search hit its depth cap; the bound is still conservative.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub epsilon: f64,
    pub margins: Vec<Margin>,
}

impl Certificate {
    pub fn worst(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.margins.iter().all(|m| m.margin >= -tol)
    }

    pub fn violations(&self, tol: f64) -> Vec<&Margin> {
        self.margins.iter().filter(|m| !(m.margin >= -tol)).collect()
    }

    /// Margins whose constraint name starts with `prefix`.
    pub fn named<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = &'a Margin> + 'a {
        self.margins.iter().filter(move |m| m.constraint.starts_with(prefix))
    }
}

fn conservative(epsilon: f64) -> ExtremaQuery {
    ExtremaQuery {
        conservative: true,
        ..ExtremaQuery::with_epsilon(epsilon)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Checks every constraint of `cfg` on the given curves in continuous time,
/// using certified bounds, whatever enforcement produced them.
pub fn certify(trajectories: &[BernsteinPoly], cfg: &ScenarioConfig, epsilon: f64) -> Result<Certificate> {
    if trajectories.len() != cfg.vehicles.len() {
        return Err(Error::config(format!(
            "{} trajectories for {} vehicles",
            trajectories.len(),
            cfg.vehicles.len()
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::domain("certification tolerance must be positive"));
    }
    let q = conservative(epsilon);
    let mut margins = Vec::new();
    let length = cfg
        .vehicles
        .iter()
        .flat_map(|v| v.start.iter().chain(&v.end))
        .fold(1.0_f64, |m, x| m.max(x.abs()));
    for (k, (traj, spec)) in trajectories.iter().zip(&cfg.vehicles).enumerate() {
        let n = traj.degree();
        let mut err = dist(traj.point(0), &spec.start).max(dist(traj.point(n), &spec.end)) / length;
        if let Some((psi0, psif, v0, vf)) = spec.boundary().filter(|_| cfg.kind.has_headings()) {
            let (d0, d1) = traj.end_derivatives()?;
            let e0 = dist(&d0, &[v0 * psi0.cos(), v0 * psi0.sin()]) / v0.max(1.0);
            let e1 = dist(&d1, &[vf * psif.cos(), vf * psif.sin()]) / vf.max(1.0);
            err = err.max(e0).max(e1);
        }
        margins.push(Margin {
            constraint: "boundary".into(),
            vehicles: vec![k],
            margin: -err,
            value: err,
            limit: 0.0,
            exhausted: false,
        });
        if let Some(v_max) = cfg.limits.v_max {
            let v2 = speed_squared(traj)?;
            let m = maximum(&v2.scale(1.0 / (v_max * v_max)), &q)?;
            margins.push(Margin {
                constraint: "speed_max".into(),
                vehicles: vec![k],
                margin: 1.0 - m.bound,
                value: v_max * m.bound.max(0.0).sqrt(),
                limit: v_max,
                exhausted: m.exhausted,
            });
        }
        if let Some(v_min) = cfg.limits.v_min.filter(|v| *v > 0.0) {
            let v2 = speed_squared(traj)?;
            let m = minimum(&v2.scale(1.0 / (v_min * v_min)), &q)?;
            margins.push(Margin {
                constraint: "speed_min".into(),
                vehicles: vec![k],
                margin: m.bound - 1.0,
                value: v_min * m.bound.max(0.0).sqrt(),
                limit: v_min,
                exhausted: m.exhausted,
            });
        }
        if let (Some(w), Some(v_max)) = (cfg.limits.omega_max, cfg.limits.v_max) {
            let (num, den) = angular_rate_parts(traj)?;
            let norm = 1.0 / (w * v_max * v_max);
            let slack = den.scale(w);
            let up = maximum(&num.sub(&slack)?.scale(norm), &q)?;
            let down = maximum(&num.scale(-1.0).sub(&slack)?.scale(norm), &q)?;
            let worst = up.bound.max(down.bound);
            margins.push(Margin {
                constraint: "turn_rate".into(),
                vehicles: vec![k],
                margin: -worst,
                value: worst,
                limit: 0.0,
                exhausted: up.exhausted || down.exhausted,
            });
        }
        for (j, o) in cfg.obstacles.iter().enumerate() {
            let r = clearance(o, cfg);
            if r <= 0.0 {
                continue;
            }
            let (margin, value, exhausted) = match o {
                Obstacle::Circle { center, .. } => {
                    let op = obstacle_poly(center, n, traj.t0(), traj.tf())?;
                    let d2 = squared_distance(traj, &op)?;
                    let m = minimum(&d2.scale(1.0 / (r * r)), &q)?;
                    (m.bound - 1.0, r * m.bound.max(0.0).sqrt(), m.exhausted)
                }
                Obstacle::Hull { points } => {
                    let d = min_distance_to_shape(traj, points, &DistanceQuery::with_epsilon(epsilon * r))?;
                    (d.lower_bound / r - 1.0, d.lower_bound, d.exhausted)
                }
            };
            margins.push(Margin {
                constraint: format!("obstacle[{j}]"),
                vehicles: vec![k],
                margin,
                value,
                limit: r,
                exhausted,
            });
        }
    }
    // The reciprocal swarm cost replaces separation constraints entirely.
    let separated = !(cfg.kind == ScenarioKind::SwarmDecentralized && cfg.cost == SwarmCost::Reciprocal);
    if cfg.d_s > 0.0 && separated {
        let s2 = cfg.d_s * cfg.d_s;
        for i in 0..trajectories.len() {
            for j in i + 1..trajectories.len() {
                let d2 = overlap_distance(&trajectories[i], &trajectories[j])?;
                let m = minimum(&d2.scale(1.0 / s2), &q)?;
                margins.push(Margin {
                    constraint: "separation".into(),
                    vehicles: vec![i, j],
                    margin: m.bound - 1.0,
                    value: cfg.d_s * m.bound.max(0.0).sqrt(),
                    limit: cfg.d_s,
                    exhausted: m.exhausted,
                });
            }
        }
    }
    Ok(Certificate { epsilon, margins })
}

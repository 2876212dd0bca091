//! Files written by `plan`. Every file goes through a temp file and a rename.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use bernopt::geom::{gjk_distance, ConvexPointSet};
use bernopt::kinematics::{angular_rate_parts, speed_squared};
use bernopt::planner::{Certificate, Enforcement, Obstacle, PhaseRecord, PlanOutcome, ScenarioConfig, ScenarioKind};
use bernopt::BernsteinPoly;
use serde::Serialize;
use tempfile::NamedTempFile;

/// Certification tolerance behind `report.feasible`.
pub const REPORT_TOLERANCE: f64 = 1e-6;

#[derive(Serialize)]
struct Report<'a> {
    kind: ScenarioKind,
    enforcement: Enforcement,
    feasible: bool,
    solver_feasible: bool,
    objective: Option<f64>,
    final_times: Vec<f64>,
    phases: &'a [PhaseRecord],
    certificate: Option<&'a Certificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let mut tmp = NamedTempFile::new_in(dir).with_context(|| format!("creating a temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(dir.join(name)).with_context(|| format!("writing {name}"))?;
    Ok(())
}

fn write_csv(dir: &Path, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().context("flushing csv")?;
    write_atomic(dir, name, &bytes)
}

/// `count` times from 0 to `end`, hitting `end` exactly.
pub fn sample_times(end: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| {
            if i + 1 == count {
                end
            } else {
                end * i as f64 / (count - 1) as f64
            }
        })
        .collect()
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn at(p: &BernsteinPoly, t: f64) -> Option<Vec<f64>> {
    p.evaluate(t).ok()
}

fn axis(d: usize) -> char {
    ['x', 'y', 'z'].get(d).copied().unwrap_or('w')
}

fn samples(trajs: &[BernsteinPoly], times: &[f64]) -> (Vec<String>, Vec<Vec<String>>) {
    let mut header = vec!["t".to_string()];
    for (k, p) in trajs.iter().enumerate() {
        header.extend((0..p.dim()).map(|d| format!("{}{k}", axis(d))));
    }
    let rows = times
        .iter()
        .map(|&t| {
            let mut row = vec![t.to_string()];
            for p in trajs {
                match at(p, t) {
                    Some(x) => row.extend(x.iter().map(f64::to_string)),
                    None => row.extend(std::iter::repeat(String::new()).take(p.dim())),
                }
            }
            row
        })
        .collect();
    (header, rows)
}

fn squared(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn constraints(trajs: &[BernsteinPoly], cfg: &ScenarioConfig, times: &[f64]) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut header = vec!["t".to_string()];
    let mut speed = Vec::new();
    let mut turn = Vec::new();
    for (k, p) in trajs.iter().enumerate() {
        header.push(format!("speed_sq_{k}"));
        speed.push(speed_squared(p)?);
        if let (Some(w), true) = (cfg.limits.omega_max, p.dim() == 2) {
            header.push(format!("turn_margin_{k}"));
            turn.push(Some((angular_rate_parts(p)?, w)));
        } else {
            turn.push(None);
        }
    }
    for i in 0..trajs.len() {
        for j in i + 1..trajs.len() {
            header.push(format!("dist_sq_{i}_{j}"));
        }
    }
    for k in 0..trajs.len() {
        for j in 0..cfg.obstacles.len() {
            header.push(format!("obs_sq_{k}_{j}"));
        }
    }
    let mut rows = Vec::with_capacity(times.len());
    for &t in times {
        let pos: Vec<Option<Vec<f64>>> = trajs.iter().map(|p| at(p, t)).collect();
        let mut row = vec![t.to_string()];
        for (k, v2) in speed.iter().enumerate() {
            row.push(cell(at(v2, t).map(|v| v[0])));
            if let Some(((num, den), w)) = &turn[k] {
                // omega_max * |v|^2 - |x' y'' - x'' y'|, nonnegative when the turn rate holds.
                let m = at(num, t).zip(at(den, t)).map(|(n, d)| w * d[0] - n[0].abs());
                row.push(cell(m));
            }
        }
        for i in 0..trajs.len() {
            for j in i + 1..trajs.len() {
                let d = match (&pos[i], &pos[j]) {
                    (Some(a), Some(b)) => Some(squared(a, b)),
                    _ => None,
                };
                row.push(cell(d));
            }
        }
        for p in &pos {
            for o in &cfg.obstacles {
                let d = match (p, o) {
                    (Some(x), Obstacle::Circle { center, .. }) => Some(squared(x, center)),
                    (Some(x), Obstacle::Hull { points }) => {
                        let me = ConvexPointSet::new(vec![x.clone()])?;
                        Some(gjk_distance(&me, points, 1e-12)?.powi(2))
                    }
                    (None, _) => None,
                };
                row.push(cell(d));
            }
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_all(dir: &Path, outcome: &PlanOutcome, count: usize) -> Result<()> {
    write_atomic(dir, "trajectories.json", &serde_json::to_vec_pretty(&outcome.trajectories)?)?;
    let end = outcome.final_times().into_iter().fold(0.0, f64::max);
    let times = sample_times(end, count);
    let (h, rows) = samples(&outcome.trajectories, &times);
    write_csv(dir, "samples.csv", &h, &rows)?;
    let (h, rows) = constraints(&outcome.trajectories, &outcome.config, &times)?;
    write_csv(dir, "constraints.csv", &h, &rows)?;
    let solver_feasible = outcome.solver_feasible();
    let report = Report {
        kind: outcome.config.kind,
        enforcement: outcome.config.enforcement,
        feasible: outcome.certificate.passes(REPORT_TOLERANCE),
        solver_feasible,
        objective: Some(outcome.results.iter().map(|r| r.objective).sum()),
        final_times: outcome.final_times(),
        phases: &outcome.phases,
        certificate: Some(&outcome.certificate),
        failure: (!solver_feasible).then(|| {
            outcome
                .results
                .iter()
                .filter(|r| !r.feasible)
                .map(|r| r.message.clone())
                .collect::<Vec<_>>()
                .join("; ")
        }),
    };
    write_atomic(dir, "report.json", &serde_json::to_vec_pretty(&report)?)
}

pub fn write_failure(dir: &Path, cfg: &ScenarioConfig, message: &str) -> Result<()> {
    let report = Report {
        kind: cfg.kind,
        enforcement: cfg.enforcement,
        feasible: false,
        solver_feasible: false,
        objective: None,
        final_times: Vec::new(),
        phases: &[],
        certificate: None,
        failure: Some(message.to_string()),
    };
    write_atomic(dir, "report.json", &serde_json::to_vec_pretty(&report)?)
}

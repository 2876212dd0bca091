use serde::{Deserialize, Serialize};

use super::certify::{certify, Certificate, DEFAULT_CERTIFY_EPSILON};
use super::config::{Enforcement, ScenarioConfig, ScenarioKind};
use super::transcribe::{transcribe, transcribe_swarm_vehicle};
use crate::error::Result;
use crate::poly::BernsteinPoly;
use crate::problem::{NlpProblem, SolverResult};
use crate::solver::{AugmentedLagrangian, Solver, SolverOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanOptions {
    pub solver: SolverOptions,
    pub certify_epsilon: f64,
    pub seed: u64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            solver: SolverOptions::default(),
            certify_epsilon: DEFAULT_CERTIFY_EPSILON,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<usize>,
    pub objective: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub iterations: usize,
    pub message: String,
}

impl PhaseRecord {
    fn new(label: String, vehicle: Option<usize>, r: &SolverResult) -> Self {
        PhaseRecord {
            label,
            vehicle,
            objective: r.objective,
            feasible: r.feasible,
            max_violation: r.max_violation,
            iterations: r.iterations,
            message: r.message.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlanOutcome {
    /// The scenario with generated endpoints filled in.
    pub config: ScenarioConfig,
    pub trajectories: Vec<BernsteinPoly>,
    /// Final solve of each problem: one for joint scenarios, one per vehicle
    /// for decentralized swarms.
    pub results: Vec<SolverResult>,
    pub phases: Vec<PhaseRecord>,
    pub certificate: Certificate,
}

impl PlanOutcome {
    /// Every final solve reported feasibility.
    pub fn solver_feasible(&self) -> bool {
        self.results.iter().all(|r| r.feasible)
    }

    pub fn final_times(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.tf()).collect()
    }
}

pub fn label(e: &Enforcement) -> String {
    match e {
        Enforcement::Hull { elevate_to } => format!("hull@{elevate_to}"),
        Enforcement::Extrema { epsilon } => format!("extrema@{epsilon:e}"),
    }
}

/// Hull-bounds passes solved before an extrema-mode problem.
pub fn warm_up(cfg: &ScenarioConfig) -> Vec<Enforcement> {
    match cfg.enforcement {
        Enforcement::Extrema { .. } if cfg.two_phase => {
            let elevations = if cfg.warm_up.is_empty() {
                vec![cfg.degree]
            } else {
                cfg.warm_up.clone()
            };
            elevations.into_iter().map(|elevate_to| Enforcement::Hull { elevate_to }).collect()
        }
        _ => Vec::new(),
    }
}

/// Solves a sequence of enforcement settings, each warm-started from the
/// previous solution.
pub fn solve_chain(
    cfg: &ScenarioConfig,
    steps: &[Enforcement],
    build: &dyn Fn(&ScenarioConfig) -> Result<NlpProblem>,
    solver: &dyn Solver,
    start: Option<Vec<f64>>,
) -> Result<Vec<SolverResult>> {
    let mut out: Vec<SolverResult> = Vec::with_capacity(steps.len());
    for e in steps {
        let mut p = build(&cfg.with_enforcement(*e))?;
        if let Some(prev) = out.last() {
            p.initial_guess = prev.x.clone();
        } else if let Some(x) = &start {
            p.initial_guess = x.clone();
        }
        out.push(solver.solve(&p)?);
    }
    Ok(out)
}

fn staged(
    cfg: &ScenarioConfig,
    build: &dyn Fn(&ScenarioConfig) -> Result<NlpProblem>,
    solver: &dyn Solver,
    vehicle: Option<usize>,
    phases: &mut Vec<PhaseRecord>,
) -> Result<SolverResult> {
    let mut steps = warm_up(cfg);
    steps.push(cfg.enforcement);
    let results = solve_chain(cfg, &steps, build, solver, None)?;
    for (e, r) in steps.iter().zip(&results) {
        phases.push(PhaseRecord::new(label(e), vehicle, r));
    }
    Ok(results.into_iter().last().expect("at least one step"))
}

/// Plans a decentralized swarm one vehicle at a time. A vehicle whose solve
/// fails still contributes its best iterate so later vehicles can proceed.
pub fn plan_swarm_decentralized(cfg: &ScenarioConfig, solver: &dyn Solver) -> Result<Vec<SolverResult>> {
    let mut phases = Vec::new();
    decentralized(cfg, solver, &mut phases)
}

fn decentralized(cfg: &ScenarioConfig, solver: &dyn Solver, phases: &mut Vec<PhaseRecord>) -> Result<Vec<SolverResult>> {
    let mut planned: Vec<BernsteinPoly> = Vec::with_capacity(cfg.vehicles.len());
    let mut results = Vec::with_capacity(cfg.vehicles.len());
    for i in 0..cfg.vehicles.len() {
        let fixed = planned.clone();
        let build = move |c: &ScenarioConfig| transcribe_swarm_vehicle(c, i, &fixed);
        let r = match staged(cfg, &build, solver, Some(i), phases) {
            Ok(r) => r,
            Err(e) => {
                let p = build(cfg)?;
                let x = p.initial_guess.clone();
                SolverResult {
                    objective: (p.objective)(&x),
                    trajectories: p.trajectories(&x),
                    max_violation: p.max_violation(&x),
                    x,
                    feasible: false,
                    iterations: 0,
                    merit_trace: Vec::new(),
                    message: format!("solve failed: {e}"),
                }
            }
        };
        planned.extend(r.trajectories.iter().cloned());
        results.push(r);
    }
    Ok(results)
}

/// Resolves, transcribes, solves and certifies a scenario.
pub fn plan(cfg: &ScenarioConfig, opts: &PlanOptions) -> Result<PlanOutcome> {
    let cfg = cfg.resolve(opts.seed)?;
    let solver = AugmentedLagrangian::new(opts.solver.clone());
    let mut phases = Vec::new();
    let results = if cfg.kind == ScenarioKind::SwarmDecentralized {
        decentralized(&cfg, &solver, &mut phases)?
    } else {
        vec![staged(&cfg, &transcribe, &solver, None, &mut phases)?]
    };
    let trajectories: Vec<BernsteinPoly> = results.iter().flat_map(|r| r.trajectories.iter().cloned()).collect();
    let certificate = certify(&trajectories, &cfg, opts.certify_epsilon)?;
    Ok(PlanOutcome {
        config: cfg,
        trajectories,
        results,
        phases,
        certificate,
    })
}

//! Nonlinear programs over a flat decision vector.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::BernsteinPoly;

pub type ObjectiveFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type ConstraintFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type DecodeFn = Arc<dyn Fn(&[f64]) -> Vec<BernsteinPoly> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `h(x) = 0`
    Equality,
    /// `g(x) <= 0`
    Inequality,
}

/// A named group of scalar constraints evaluated together.
#[derive(Clone)]
pub struct ConstraintBlock {
    pub name: String,
    pub kind: ConstraintKind,
    pub len: usize,
    /// Variables the block reads; `None` means all of them. Lets the solver
    /// skip unaffected blocks when differencing.
    pub deps: Option<Vec<usize>>,
    pub eval: ConstraintFn,
}

impl fmt::Debug for ConstraintBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConstraintBlock")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("len", &self.len)
            .field("deps", &self.deps)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SliceKind {
    Coefficients,
    FinalTime,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayoutSlice {
    pub vehicle: usize,
    pub kind: SliceKind,
    pub range: Range<usize>,
}

/// Which part of the decision vector belongs to which vehicle.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Layout {
    pub slices: Vec<LayoutSlice>,
}

impl Layout {
    pub fn free(dim: usize) -> Self {
        Layout {
            slices: vec![LayoutSlice {
                vehicle: 0,
                kind: SliceKind::Free,
                range: 0..dim,
            }],
        }
    }

    /// The slices must tile `0..dim` in order.
    pub fn validate(&self, dim: usize) -> Result<()> {
        let mut next = 0;
        for s in &self.slices {
            if s.range.start != next || s.range.end < s.range.start {
                return Err(Error::config(format!(
                    "layout slice {:?} does not continue at index {next}",
                    s.range
                )));
            }
            next = s.range.end;
        }
        if next != dim {
            return Err(Error::config(format!(
                "layout covers {next} of {dim} variables"
            )));
        }
        Ok(())
    }

    pub fn vehicle_vars(&self, vehicle: usize) -> Vec<usize> {
        self.slices
            .iter()
            .filter(|s| s.vehicle == vehicle)
            .flat_map(|s| s.range.clone())
            .collect()
    }
}

#[derive(Clone)]
pub struct NlpProblem {
    pub dim: usize,
    pub objective: ObjectiveFn,
    pub constraints: Vec<ConstraintBlock>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub initial_guess: Vec<f64>,
    pub layout: Layout,
    pub decode: Option<DecodeFn>,
}

impl fmt::Debug for NlpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlpProblem")
            .field("dim", &self.dim)
            .field("constraints", &self.constraints)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("initial_guess", &self.initial_guess)
            .field("layout", &self.layout)
            .finish()
    }
}

impl NlpProblem {
    /// Unbounded problem with no constraints.
    pub fn new(initial_guess: Vec<f64>, objective: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        let dim = initial_guess.len();
        NlpProblem {
            dim,
            objective: Arc::new(objective),
            constraints: Vec::new(),
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            initial_guess,
            layout: Layout::free(dim),
            decode: None,
        }
    }

    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn push_constraint(
        &mut self,
        name: impl Into<String>,
        kind: ConstraintKind,
        len: usize,
        deps: Option<Vec<usize>>,
        eval: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) {
        self.constraints.push(ConstraintBlock {
            name: name.into(),
            kind,
            len,
            deps,
            eval: Arc::new(eval),
        });
    }

    pub fn inequality(mut self, name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.push_constraint(name, ConstraintKind::Inequality, 1, None, move |x| vec![eval(x)]);
        self
    }

    pub fn equality(mut self, name: impl Into<String>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.push_constraint(name, ConstraintKind::Equality, 1, None, move |x| vec![eval(x)]);
        self
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.iter().map(|c| c.len).sum()
    }

    pub fn count(&self, kind: ConstraintKind) -> usize {
        self.constraints
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.len)
            .sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_guess.len() != self.dim || self.lower.len() != self.dim || self.upper.len() != self.dim {
            return Err(Error::config("guess and bounds must match the problem dimension"));
        }
        if self.lower.iter().zip(&self.upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::config("lower bound above upper bound"));
        }
        for c in &self.constraints {
            if let Some(deps) = &c.deps {
                if deps.iter().any(|d| *d >= self.dim) {
                    return Err(Error::config(format!(
                        "constraint block {} depends on a variable out of range",
                        c.name
                    )));
                }
            }
        }
        self.layout.validate(self.dim)
    }

    /// Clamps `x` into the box.
    pub fn project(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn eval_constraints(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.constraints
            .iter()
            .map(|c| {
                let v = (c.eval)(x);
                debug_assert_eq!(v.len(), c.len, "block {}", c.name);
                v
            })
            .collect()
    }

    /// Largest constraint violation at `x` (bounds are assumed satisfied).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        violation(&self.constraints, &self.eval_constraints(x))
    }

    pub fn trajectories(&self, x: &[f64]) -> Vec<BernsteinPoly> {
        self.decode.as_ref().map(|d| d(x)).unwrap_or_default()
    }
}

pub(crate) fn violation(blocks: &[ConstraintBlock], values: &[Vec<f64>]) -> f64 {
    let mut worst = 0.0_f64;
    for (b, vals) in blocks.iter().zip(values) {
        for v in vals {
            let e = match b.kind {
                ConstraintKind::Equality => v.abs(),
                ConstraintKind::Inequality => v.max(0.0),
            };
            // NaN counts as infinitely violated.
            worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritStep {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub x: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
    pub max_violation: f64,
    pub iterations: usize,
    pub trajectories: Vec<BernsteinPoly>,
    /// Augmented Lagrangian value around each outer iteration's inner solve.
    pub merit_trace: Vec<MeritStep>,
    pub message: String,
}

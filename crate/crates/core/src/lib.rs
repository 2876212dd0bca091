//! Trajectory generation with Bernstein polynomials.

pub mod error;
pub mod geom;
pub mod kinematics;
pub mod planner;
pub mod poly;
pub mod problem;
pub mod rational;
pub mod solver;

pub use error::{Error, Result};
pub use poly::BernsteinPoly;
pub use rational::RationalBernsteinPoly;
pub use problem::{NlpProblem, SolverResult};
pub use solver::{solve, AugmentedLagrangian, Solver, SolverOptions};

//! Scenario transcription into nonlinear programs, plus solve drivers and
//! continuous-time certification.

mod certify;
mod config;
mod drive;
mod transcribe;

pub use certify::{certify, Certificate, Margin, DEFAULT_CERTIFY_EPSILON};
pub use config::{
    Enforcement, Limits, Obstacle, ScenarioConfig, ScenarioKind, SwarmCost, SwarmLayout, VehicleSpec,
};
pub use drive::{
    label, plan, plan_swarm_decentralized, solve_chain, warm_up, PhaseRecord, PlanOptions, PlanOutcome,
};
pub use transcribe::{
    arc_length_surrogate, reduce_constraint, reduced_len, transcribe, transcribe_atc, transcribe_cluttered,
    transcribe_dubins, transcribe_swarm_centralized, transcribe_swarm_vehicle, Sense, MIN_FINAL_TIME,
};

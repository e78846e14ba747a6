//! Hybrid leader-follower simulation driven by the local supervisors.

use thiserror::Error;

use crate::models::ModelError;
use crate::polar::PolarError;

pub mod config;
pub mod engine;
pub mod output;
pub mod world;

pub use config::{schedule_value, FollowerConfig, ScenarioConfig, Schedule};
pub use engine::{
    agent_event_strings, run_scenario, Detected, PhaseVerdict, ScenarioOutcome, ScenarioVerdict, SimModels, Simulator,
};
pub use world::{AgentState, AlarmEpisode, EventRecord, Source, TrajectoryRow, WorldState};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("follower {agent} left the control horizon at t={t:.3} (r={r:.3})")]
    HorizonViolation { agent: u8, t: f64, r: f64 },
    #[error("follower {agent} has no enabled command at t={t:.3}")]
    SupervisorBlocked { agent: u8, t: f64 },
    #[error("event {event} is not enabled for follower {agent} at t={t:.3}")]
    UnexpectedEvent { agent: u8, t: f64, event: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Polar(#[from] PolarError),
}

use std::fmt;

use crate::automaton::StateId;
use crate::geometry::Vec2;
use crate::models::Agent;
use crate::polar::{ControlMode, RegionIndex, VertexControls};

/// Discrete side of one follower.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    /// States of the plant, the formation supervisor and the local collision supervisor.
    pub supervisor: [StateId; 3],
    /// Region tracked by the last detection.
    pub region: RegionIndex,
    /// The active actuation command.
    pub command: Option<ControlMode>,
    /// Controller realizing the command; absent when the design speed is zero.
    pub controller: Option<VertexControls>,
    pub stopped: bool,
    /// Relative velocity applied during the last step.
    pub velocity: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    /// Number of steps taken; `t = step · dt`.
    pub step: u64,
    pub t: f64,
    pub leader_pos: Vec2,
    /// Follower positions in the leader frame.
    pub follower_pos: [Vec2; 2],
    /// Follower positions relative to their desired offsets.
    pub relative_pos: [Vec2; 2],
    pub agents: [AgentState; 2],
    /// The avoider of the running alarm episode.
    pub episode: Option<Agent>,
}

impl WorldState {
    /// Inter-follower distance, leader frame.
    pub fn separation(&self) -> f64 {
        self.follower_pos[0].distance(self.follower_pos[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Agent(Agent),
    World,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Source::Agent(a) => write!(f, "{}", a.index()),
            Source::World => f.write_str("world"),
        }
    }
}

/// One line of the event log. Records whose event is not an automaton event
/// (`formation_switch`, `alarm_cleared`) are bookkeeping only.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t: f64,
    pub source: Source,
    pub event: String,
    pub detail: String,
}

pub const FORMATION_SWITCH: &str = "formation_switch";
pub const ALARM_CLEARED: &str = "alarm_cleared";

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "t={:.3} agent={} event={} detail={}",
            self.t, self.source, self.event, self.detail
        )
    }
}

/// One row of the trajectory table. Follower positions are world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub t: f64,
    pub leader: Vec2,
    pub followers: [Vec2; 2],
    pub relative: [Vec2; 2],
    pub regions: [RegionIndex; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlarmEpisode {
    pub avoider: Agent,
    pub alarm: String,
    pub start: f64,
    pub stop: f64,
    pub release: Option<f64>,
}

//! The lockstep hybrid loop: continuous step, event detection, supervisor reaction.

use std::collections::BTreeSet;

use log::{debug, info};

use crate::automaton::{Automaton, StateId};
use crate::geometry::{angle_difference, Vec2};
use crate::models::{build_local_supervisors, build_plant, classify_event, Agent};
use crate::polar::{design_controller, eval_control, ControlMode, ControllerDesign, PolarPartition, RegionIndex};

use super::config::{schedule_value, ScenarioConfig};
use super::world::{
    AgentState, AlarmEpisode, EventRecord, Source, TrajectoryRow, WorldState, ALARM_CLEARED, FORMATION_SWITCH,
};
use super::SimError;

const PLANT: usize = 0;
const FORMATION: usize = 1;

/// Name of the formation-supervisor state in which an agent holds formation.
const KEEP_STATE: &str = "keep";

/// The three local automata of each agent: plant `A_k`, formation supervisor
/// `A_F_k` and local collision supervisor `A_C_k`.
#[derive(Debug, Clone)]
pub struct SimModels {
    pub local: [[Automaton; 3]; 2],
    alphabets: [BTreeSet<String>; 2],
}

impl SimModels {
    pub fn build(p: &PolarPartition) -> Result<Self, SimError> {
        let (f1, f2, c1, c2) = build_local_supervisors(p)?;
        let local = [
            [build_plant(Agent::One, p)?, f1, c1],
            [build_plant(Agent::Two, p)?, f2, c2],
        ];
        let alphabets = [0, 1].map(|k: usize| local[k].iter().flat_map(|a| a.alphabet()).collect::<BTreeSet<String>>());
        Ok(SimModels { local, alphabets })
    }

    pub fn alphabet(&self, agent: Agent) -> &BTreeSet<String> {
        &self.alphabets[agent.slot()]
    }

    pub fn initial(&self, agent: Agent) -> [StateId; 3] {
        self.local[agent.slot()].each_ref().map(Automaton::initial)
    }

    /// Successor of the local product on `event`, if every component that
    /// knows `event` enables it.
    pub fn local_step(&self, agent: Agent, states: [StateId; 3], event: &str) -> Option<[StateId; 3]> {
        let mut out = states;
        for (c, a) in self.local[agent.slot()].iter().enumerate() {
            if let Some(e) = a.event_id(event) {
                out[c] = a.step(states[c], e)?;
            }
        }
        Some(out)
    }

    pub fn holds_formation(&self, agent: Agent, states: [StateId; 3]) -> bool {
        self.local[agent.slot()][FORMATION].state_name(states[FORMATION]) == KEEP_STATE
    }

    /// Whether the plant is ready for a new actuation command.
    pub fn awaiting_command(&self, agent: Agent, states: [StateId; 3]) -> bool {
        let plant = &self.local[agent.slot()][PLANT];
        ControlMode::ALL.into_iter().any(|m| {
            plant
                .event_id(&agent.command_event(m))
                .is_some_and(|e| plant.is_enabled(states[PLANT], e))
        })
    }
}

/// Outputs of a detection pass, in processing order.
#[derive(Debug, Clone, PartialEq)]
pub enum Detected {
    Region {
        agent: Agent,
        region: RegionIndex,
    },
    Alarm {
        avoider: Agent,
        in_front: bool,
        distance: f64,
        bearing: f64,
    },
    AlarmCleared {
        distance: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseVerdict {
    pub start: f64,
    pub end: f64,
    /// Time of the first entry into the first ring, per agent.
    pub t_reach: [Option<f64>; 2],
    /// Whether the agent stayed in the first ring from `t_reach` to the end of the phase.
    pub hold: [bool; 2],
    pub min_separation: f64,
    pub alarm_episodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioVerdict {
    pub phases: Vec<PhaseVerdict>,
    pub min_separation: f64,
    pub episodes: Vec<AlarmEpisode>,
    pub final_regions: [RegionIndex; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub rows: Vec<TrajectoryRow>,
    pub log: Vec<EventRecord>,
    pub verdict: ScenarioVerdict,
}

/// Log and episode bookkeeping written by [`Simulator::supervisor_react`].
#[derive(Debug, Default)]
pub struct Journal {
    pub records: Vec<EventRecord>,
    pub episodes: Vec<AlarmEpisode>,
}

pub struct Simulator {
    cfg: ScenarioConfig,
    models: SimModels,
    design: ControllerDesign,
}

/// Command preference once stop and release events have been handled.
fn command_rank(mode: ControlMode) -> u8 {
    match mode {
        ControlMode::Invariant => 0,
        ControlMode::ExitThetaPlus => 1,
        ControlMode::ExitRMinus => 2,
        _ => 3,
    }
}

impl Simulator {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let models = SimModels::build(&cfg.partition)?;
        let design = ControllerDesign {
            speed: cfg.design_speed(),
            u_max: cfg.u_max,
            margin: cfg.margin,
            lateral: cfg.lateral,
        };
        Ok(Simulator { cfg, models, design })
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn models(&self) -> &SimModels {
        &self.models
    }

    fn locate(&self, agent: Agent, t: f64, x: Vec2) -> Result<RegionIndex, SimError> {
        self.cfg.partition.locate(x).map_err(|_| SimError::HorizonViolation {
            agent: agent.index(),
            t,
            r: x.norm(),
        })
    }

    /// The world at `t = 0`, before any command has been issued.
    pub fn initial_state(&self) -> Result<WorldState, SimError> {
        let mut agents = Vec::with_capacity(2);
        let mut follower_pos = [Vec2::ZERO; 2];
        let mut relative_pos = [Vec2::ZERO; 2];
        for agent in Agent::BOTH {
            let f = &self.cfg.followers[agent.slot()];
            relative_pos[agent.slot()] = schedule_value(&f.displacements, 0.0);
            follower_pos[agent.slot()] = f.initial_position();
            agents.push(AgentState {
                supervisor: self.models.initial(agent),
                region: self.locate(agent, 0.0, relative_pos[agent.slot()])?,
                command: None,
                controller: None,
                stopped: false,
                velocity: Vec2::ZERO,
            });
        }
        let agents: [AgentState; 2] = agents.try_into().expect("two agents");
        Ok(WorldState {
            step: 0,
            t: 0.0,
            leader_pos: Vec2::ZERO,
            follower_pos,
            relative_pos,
            agents,
            episode: None,
        })
    }

    /// One explicit Euler step of the continuous dynamics.
    pub fn step(&self, w: &WorldState) -> Result<WorldState, SimError> {
        let dt = self.cfg.dt;
        let v_leader = schedule_value(&self.cfg.leader_velocity, w.t);
        let mut next = w.clone();
        next.step = w.step + 1;
        next.t = next.step as f64 * dt;
        next.leader_pos = w.leader_pos + v_leader * dt;
        for agent in Agent::BOTH {
            let k = agent.slot();
            let state = &w.agents[k];
            let v_rel = match (&state.controller, state.stopped) {
                (Some(vc), false) => eval_control(&self.cfg.partition, state.region, vc, w.relative_pos[k])?,
                _ => Vec2::ZERO,
            };
            let v_follower = (v_leader + v_rel).clamp_norm(self.cfg.u_max);
            let v_applied = v_follower - v_leader;
            // Offsets only change at switches, which re-centre explicitly, so
            // both frames advance by the same displacement.
            next.follower_pos[k] = w.follower_pos[k] + v_applied * dt;
            next.relative_pos[k] = w.relative_pos[k] + v_applied * dt;
            next.agents[k].velocity = v_applied;
            self.locate(agent, next.t, next.relative_pos[k])?;
        }
        Ok(next)
    }

    fn will_hold_formation(&self, agent: Agent, states: [StateId; 3], region: Option<RegionIndex>) -> bool {
        if self.models.holds_formation(agent, states) {
            return true;
        }
        region
            .and_then(|r| self.models.local_step(agent, states, &agent.detection_event(r.i, r.j)))
            .is_some_and(|s| self.models.holds_formation(agent, s))
    }

    /// Region crossings, then at most one alarm, then the alarm-cleared notice.
    pub fn detect_events(&self, prev: &WorldState, next: &WorldState) -> Result<Vec<Detected>, SimError> {
        let mut out = Vec::new();
        let mut entered: [Option<RegionIndex>; 2] = [None; 2];
        for agent in Agent::BOTH {
            let k = agent.slot();
            let region = self.locate(agent, next.t, next.relative_pos[k])?;
            if region != next.agents[k].region {
                entered[k] = Some(region);
                out.push(Detected::Region { agent, region });
            }
        }
        let distance = next.separation();
        if next.episode.is_none() && distance < self.cfg.alarm_radius {
            let avoider = Agent::BOTH
                .into_iter()
                .find(|&a| !self.will_hold_formation(a, next.agents[a.slot()].supervisor, entered[a.slot()]));
            if let Some(avoider) = avoider {
                let k = avoider.slot();
                let to_other = next.follower_pos[avoider.other().slot()] - next.follower_pos[k];
                let moving = next.agents[k].velocity;
                let heading = if next.agents[k].command != Some(ControlMode::Invariant) && moving.norm() > 1e-9 {
                    moving
                } else {
                    -next.relative_pos[k]
                };
                let bearing = if heading.norm() > 1e-12 {
                    angle_difference(to_other.angle(), heading.angle())
                } else {
                    0.0
                };
                out.push(Detected::Alarm {
                    avoider,
                    in_front: bearing.abs() <= self.cfg.front_half_angle,
                    distance,
                    bearing,
                });
            }
        }
        if next.episode.is_some() && prev.separation() <= self.cfg.release_radius && distance > self.cfg.release_radius
        {
            out.push(Detected::AlarmCleared { distance });
        }
        Ok(out)
    }

    /// Fires `event` on every agent whose local alphabet contains it.
    fn fire(
        &self,
        w: &mut WorldState,
        event: &str,
        source: Source,
        detail: String,
        journal: &mut Journal,
    ) -> Result<(), SimError> {
        let mut updates = Vec::new();
        for agent in Agent::BOTH {
            if self.models.alphabet(agent).contains(event) {
                let states = w.agents[agent.slot()].supervisor;
                let next = self
                    .models
                    .local_step(agent, states, event)
                    .ok_or_else(|| SimError::UnexpectedEvent {
                        agent: agent.index(),
                        t: w.t,
                        event: event.to_string(),
                    })?;
                updates.push((agent, next));
            }
        }
        for (agent, next) in updates {
            w.agents[agent.slot()].supervisor = next;
        }
        debug!("t={:.3} {source} {event} {detail}", w.t);
        journal.records.push(EventRecord {
            t: w.t,
            source,
            event: event.to_string(),
            detail,
        });
        Ok(())
    }

    fn team_enables(&self, w: &WorldState, event: &str) -> bool {
        Agent::BOTH.into_iter().all(|agent| {
            !self.models.alphabet(agent).contains(event)
                || self
                    .models
                    .local_step(agent, w.agents[agent.slot()].supervisor, event)
                    .is_some()
        })
    }

    /// Feeds detected events through the local supervisors, then emits the
    /// controllable responses: stop with an alarm, release when the episode
    /// can end, and one actuation command for every ready, unstopped agent.
    pub fn supervisor_react(
        &self,
        w: &mut WorldState,
        events: &[Detected],
        journal: &mut Journal,
    ) -> Result<(), SimError> {
        for ev in events {
            match *ev {
                Detected::Region { agent, region } => {
                    let event = agent.detection_event(region.i, region.j);
                    self.fire(w, &event, Source::Agent(agent), format!("region={region}"), journal)?;
                    let state = &mut w.agents[agent.slot()];
                    state.region = region;
                    state.command = None;
                    state.controller = None;
                }
                Detected::Alarm {
                    avoider,
                    in_front,
                    distance,
                    bearing,
                } => {
                    let alarm = avoider.alarm_event(in_front);
                    let detail = format!("distance={distance:.3} bearing_deg={:.1}", bearing.to_degrees());
                    self.fire(w, &alarm, Source::World, detail, journal)?;
                    let other = avoider.other();
                    self.fire(
                        w,
                        &other.stop_event(),
                        Source::Agent(avoider),
                        format!("stopped={}", other.index()),
                        journal,
                    )?;
                    w.agents[other.slot()].stopped = true;
                    w.episode = Some(avoider);
                    info!(
                        "t={:.3} alarm {alarm}: follower {} stops follower {}",
                        w.t,
                        avoider.index(),
                        other.index()
                    );
                    journal.episodes.push(AlarmEpisode {
                        avoider,
                        alarm,
                        start: w.t,
                        stop: w.t,
                        release: None,
                    });
                }
                Detected::AlarmCleared { distance } => journal.records.push(EventRecord {
                    t: w.t,
                    source: Source::World,
                    event: ALARM_CLEARED.to_string(),
                    detail: format!("distance={distance:.3}"),
                }),
            }
        }

        if let Some(avoider) = w.episode {
            let other = avoider.other();
            let clear = w.separation() > self.cfg.release_radius;
            let reached = self
                .models
                .holds_formation(avoider, w.agents[avoider.slot()].supervisor);
            let release = other.release_event();
            if (clear || reached) && self.team_enables(w, &release) {
                let why = if clear { "alarm_cleared" } else { "formation_reached" };
                self.fire(
                    w,
                    &release,
                    Source::Agent(avoider),
                    format!("released={} reason={why}", other.index()),
                    journal,
                )?;
                w.agents[other.slot()].stopped = false;
                w.episode = None;
                if let Some(ep) = journal.episodes.last_mut() {
                    ep.release = Some(w.t);
                }
            }
        }

        for agent in Agent::BOTH {
            self.issue_command(w, agent, journal)?;
        }
        Ok(())
    }

    fn issue_command(&self, w: &mut WorldState, agent: Agent, journal: &mut Journal) -> Result<(), SimError> {
        let k = agent.slot();
        let states = w.agents[k].supervisor;
        if w.agents[k].stopped || !self.models.awaiting_command(agent, states) {
            return Ok(());
        }
        let mut candidates: Vec<(u8, String, ControlMode)> = ControlMode::ALL
            .into_iter()
            .map(|m| (command_rank(m), agent.command_event(m), m))
            .filter(|(_, e, _)| self.models.local_step(agent, states, e).is_some())
            .collect();
        candidates.sort();
        let Some((_, event, mode)) = candidates.into_iter().next() else {
            return Err(SimError::SupervisorBlocked {
                agent: agent.index(),
                t: w.t,
            });
        };
        if mode == ControlMode::Invariant && w.agents[k].command == Some(ControlMode::Invariant) {
            return Ok(());
        }
        let region = w.agents[k].region;
        let realized = if mode.is_legal(region) {
            mode
        } else {
            ControlMode::ExitThetaPlus
        };
        let controller = if self.design.speed > 0.0 {
            Some(design_controller(&self.cfg.partition, region, realized, &self.design)?)
        } else {
            None
        };
        let mut detail = format!("region={region} mode={realized}");
        if realized != mode {
            detail.push_str(" fallback=true");
        }
        self.fire(w, &event, Source::Agent(agent), detail, journal)?;
        w.agents[k].command = Some(mode);
        w.agents[k].controller = controller;
        Ok(())
    }

    /// Applies an offset switch: supervisors restart, the relative frames are
    /// re-centred, and followers with a displacement entry at this instant are
    /// re-seeded there.
    fn switch_formation(&self, w: &mut WorldState, journal: &mut Journal) -> Result<(), SimError> {
        let mut detail = Vec::new();
        for agent in Agent::BOTH {
            let k = agent.slot();
            let f = &self.cfg.followers[k];
            let offset = schedule_value(&f.offsets, w.t);
            if let Some((_, d)) = f
                .displacements
                .iter()
                .find(|(t, _)| (t - w.t).abs() < 0.5 * self.cfg.dt)
            {
                w.relative_pos[k] = *d;
                w.follower_pos[k] = offset + *d;
            } else {
                w.relative_pos[k] = w.follower_pos[k] - offset;
            }
            let region = self.locate(agent, w.t, w.relative_pos[k])?;
            w.agents[k] = AgentState {
                supervisor: self.models.initial(agent),
                region,
                command: None,
                controller: None,
                stopped: false,
                velocity: Vec2::ZERO,
            };
            detail.push(format!("offset{}=({:.3},{:.3})", agent.index(), offset.x, offset.y));
        }
        if w.episode.take().is_some() {
            if let Some(ep) = journal.episodes.last_mut() {
                ep.release.get_or_insert(w.t);
            }
        }
        journal.records.push(EventRecord {
            t: w.t,
            source: Source::World,
            event: FORMATION_SWITCH.to_string(),
            detail: detail.join(" "),
        });
        info!("t={:.3} formation switch", w.t);
        Ok(())
    }

    fn row(&self, w: &WorldState) -> TrajectoryRow {
        TrajectoryRow {
            t: w.t,
            leader: w.leader_pos,
            followers: w.follower_pos.map(|p| w.leader_pos + p),
            relative: w.relative_pos,
            regions: [w.agents[0].region, w.agents[1].region],
        }
    }

    pub fn run(&self) -> Result<ScenarioOutcome, SimError> {
        let dt = self.cfg.dt;
        let total_steps = (self.cfg.t_end / dt).round() as u64;
        let switch_steps: Vec<u64> = self
            .cfg
            .switch_times()
            .into_iter()
            .map(|t| (t / dt).round() as u64)
            .filter(|&s| s > 0 && s <= total_steps)
            .collect();

        let mut journal = Journal::default();
        let mut w = self.initial_state()?;
        self.supervisor_react(&mut w, &[], &mut journal)?;

        let mut rows = vec![self.row(&w)];
        let mut phases = vec![PhaseVerdict {
            start: 0.0,
            end: self.cfg.t_end,
            t_reach: [None; 2],
            hold: [true; 2],
            min_separation: w.separation(),
            alarm_episodes: 0,
        }];
        let mut episodes_before_phase = 0;

        for n in 1..=total_steps {
            let mut next = self.step(&w)?;
            let events = self.detect_events(&w, &next)?;
            self.supervisor_react(&mut next, &events, &mut journal)?;
            w = next;

            if switch_steps.contains(&n) {
                let phase = phases.last_mut().expect("one phase");
                phase.end = w.t;
                phase.alarm_episodes = journal.episodes.len() - episodes_before_phase;
                episodes_before_phase = journal.episodes.len();
                self.switch_formation(&mut w, &mut journal)?;
                self.supervisor_react(&mut w, &[], &mut journal)?;
                phases.push(PhaseVerdict {
                    start: w.t,
                    end: self.cfg.t_end,
                    t_reach: [None; 2],
                    hold: [true; 2],
                    min_separation: w.separation(),
                    alarm_episodes: 0,
                });
            }

            let phase = phases.last_mut().expect("one phase");
            phase.min_separation = phase.min_separation.min(w.separation());
            for agent in Agent::BOTH {
                let k = agent.slot();
                match phase.t_reach[k] {
                    None if self.models.holds_formation(agent, w.agents[k].supervisor) => phase.t_reach[k] = Some(w.t),
                    Some(_) if w.agents[k].region.i != 1 => phase.hold[k] = false,
                    _ => {}
                }
            }
            rows.push(self.row(&w));
        }
        if let Some(last) = phases.last_mut() {
            last.end = w.t;
            last.alarm_episodes = journal.episodes.len() - episodes_before_phase;
        }
        let min_separation = phases.iter().map(|p| p.min_separation).fold(f64::INFINITY, f64::min);
        Ok(ScenarioOutcome {
            rows,
            log: journal.records,
            verdict: ScenarioVerdict {
                phases,
                min_separation,
                episodes: journal.episodes,
                final_regions: [w.agents[0].region, w.agents[1].region],
            },
        })
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome, SimError> {
    Simulator::new(cfg.clone())?.run()
}

/// Splits the log into formation phases and keeps, per phase, the events of
/// `agent`'s local alphabet in order.
pub fn agent_event_strings(log: &[EventRecord], alphabet: &BTreeSet<String>) -> Vec<Vec<String>> {
    let mut out = vec![Vec::new()];
    for r in log {
        if r.event == FORMATION_SWITCH {
            out.push(Vec::new());
        } else if alphabet.contains(&r.event) {
            out.last_mut().expect("one phase").push(r.event.clone());
        }
    }
    out
}

/// Whether an event id denotes an automaton event rather than a bookkeeping record.
pub fn is_model_event(id: &str) -> bool {
    classify_event(id).is_some()
}

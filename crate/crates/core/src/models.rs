//! The two-follower formation models: plants, reach/keep specifications, the
//! cooperative collision-avoidance specification and its local supervisors.
//!
//! Event names:
//! - commands `Cr+_k`, `Cr-_k`, `Ct+_k`, `Ct-_k` and `C0_k` (controllable, owner `k`);
//! - detections `d_i_j_k` on entering region `(i, j)` (uncontrollable, owner `k`);
//! - alarms `ca12F`, `ca12N`, `ca21F`, `ca21N` (uncontrollable, shared);
//! - `Stop1`, `Stop2`, `R12`, `R21` (controllable, shared).
//!
//! `ca12*` means follower 1 has follower 2 in its alarm zone and must avoid;
//! the avoider stops the other follower and later releases it. `R12` releases
//! follower 1 and `R21` releases follower 2.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::automaton::{Automaton, AutomatonError, EventInfo};
use crate::bisim::is_bisimilar;
use crate::compose::parallel_compose;
use crate::polar::{ControlMode, PolarPartition};
use crate::synthesis::{decompose, SynthesisError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error("collision supervisor is not decomposable: {0}")]
    NotDecomposable(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Agent {
    One,
    Two,
}

impl Agent {
    pub const BOTH: [Agent; 2] = [Agent::One, Agent::Two];

    pub fn from_index(k: u8) -> Option<Agent> {
        match k {
            1 => Some(Agent::One),
            2 => Some(Agent::Two),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Agent::One => 1,
            Agent::Two => 2,
        }
    }

    /// Zero-based slot, for arrays indexed by agent.
    pub fn slot(self) -> usize {
        usize::from(self.index() - 1)
    }

    pub fn other(self) -> Agent {
        match self {
            Agent::One => Agent::Two,
            Agent::Two => Agent::One,
        }
    }

    /// `Stop{k}`: stops this agent.
    pub fn stop_event(self) -> String {
        format!("Stop{}", self.index())
    }

    /// The release of this agent: `R12` for agent 1, `R21` for agent 2.
    pub fn release_event(self) -> String {
        format!("R{}{}", self.index(), self.other().index())
    }

    /// `ca{k}{o}F` or `ca{k}{o}N`: this agent sees the other in its alarm zone.
    pub fn alarm_event(self, in_front: bool) -> String {
        format!(
            "ca{}{}{}",
            self.index(),
            self.other().index(),
            if in_front { 'F' } else { 'N' }
        )
    }

    pub fn command_event(self, mode: ControlMode) -> String {
        let stem = match mode {
            ControlMode::Invariant => "C0",
            ControlMode::ExitRPlus => "Cr+",
            ControlMode::ExitRMinus => "Cr-",
            ControlMode::ExitThetaPlus => "Ct+",
            ControlMode::ExitThetaMinus => "Ct-",
        };
        format!("{stem}_{}", self.index())
    }

    pub fn detection_event(self, i: usize, j: usize) -> String {
        format!("d_{i}_{j}_{}", self.index())
    }
}

/// The event kinds an agent's event id can denote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Command(Agent, ControlMode),
    Detection(Agent, usize, usize),
    Alarm { avoider: Agent, in_front: bool },
    Stop(Agent),
    Release(Agent),
}

pub fn classify_event(id: &str) -> Option<EventKind> {
    for agent in Agent::BOTH {
        for mode in ControlMode::ALL {
            if id == agent.command_event(mode) {
                return Some(EventKind::Command(agent, mode));
            }
        }
        for in_front in [true, false] {
            if id == agent.alarm_event(in_front) {
                return Some(EventKind::Alarm {
                    avoider: agent,
                    in_front,
                });
            }
        }
        if id == agent.stop_event() {
            return Some(EventKind::Stop(agent));
        }
        if id == agent.release_event() {
            return Some(EventKind::Release(agent));
        }
    }
    let rest = id.strip_prefix("d_")?;
    let parts: Vec<&str> = rest.split('_').collect();
    if let [i, j, k] = parts.as_slice() {
        let agent = Agent::from_index(k.parse().ok()?)?;
        return Some(EventKind::Detection(agent, i.parse().ok()?, j.parse().ok()?));
    }
    None
}

/// Event sets of one follower.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentAlphabet {
    pub agent: Agent,
    /// The four exit commands, `Cr+ Cr- Ct+ Ct-`.
    pub commands: Vec<String>,
    pub c0: String,
    /// Detections of every region, ring-major.
    pub detections: Vec<String>,
    /// Detections of the first ring, `D_M ⊂ D`.
    pub first_circle: Vec<String>,
    pub alarms: Vec<String>,
    /// `Stop1 Stop2 R12 R21`.
    pub coordination: Vec<String>,
}

impl AgentAlphabet {
    pub fn new(agent: Agent, p: &PolarPartition) -> Self {
        let commands = [
            ControlMode::ExitRPlus,
            ControlMode::ExitRMinus,
            ControlMode::ExitThetaPlus,
            ControlMode::ExitThetaMinus,
        ]
        .into_iter()
        .map(|m| agent.command_event(m))
        .collect();
        let detections = p.regions().map(|r| agent.detection_event(r.i, r.j)).collect();
        let first_circle = (1..=p.sectors()).map(|j| agent.detection_event(1, j)).collect();
        AgentAlphabet {
            agent,
            commands,
            c0: agent.command_event(ControlMode::Invariant),
            detections,
            first_circle,
            alarms: external_alarms(),
            coordination: external_coordination(),
        }
    }

    /// Detections outside the first ring.
    pub fn outer_detections(&self) -> impl Iterator<Item = &String> + '_ {
        self.detections.iter().filter(|d| !self.first_circle.contains(d))
    }

    /// `Ex`: alarms plus stop and release events.
    pub fn external(&self) -> impl Iterator<Item = &String> + '_ {
        self.alarms.iter().chain(&self.coordination)
    }

    /// The local event set `E_k`.
    pub fn event_set(&self) -> BTreeSet<String> {
        self.event_infos().into_iter().map(|e| e.id).collect()
    }

    /// `E_uc,k = CA ∪ D_k`.
    pub fn uncontrollable(&self) -> BTreeSet<String> {
        self.alarms.iter().chain(&self.detections).cloned().collect()
    }

    pub fn event_infos(&self) -> Vec<EventInfo> {
        let k = [self.agent.index()];
        let mut out: Vec<EventInfo> = self
            .commands
            .iter()
            .chain([&self.c0])
            .map(|c| EventInfo::controllable(c.clone()).owned_by(&k))
            .collect();
        out.extend(
            self.detections
                .iter()
                .map(|d| EventInfo::uncontrollable(d.clone()).owned_by(&k)),
        );
        out.extend(external_infos());
        out
    }
}

fn external_alarms() -> Vec<String> {
    Agent::BOTH
        .into_iter()
        .flat_map(|a| [a.alarm_event(true), a.alarm_event(false)])
        .collect()
}

fn external_coordination() -> Vec<String> {
    vec!["Stop1".into(), "Stop2".into(), "R12".into(), "R21".into()]
}

fn external_infos() -> Vec<EventInfo> {
    let mut out: Vec<EventInfo> = external_alarms()
        .into_iter()
        .map(|e| EventInfo::uncontrollable(e).owned_by(&[1, 2]))
        .collect();
    out.extend(
        external_coordination()
            .into_iter()
            .map(|e| EventInfo::controllable(e).owned_by(&[1, 2])),
    );
    out
}

/// Plant `A_k`: `R_k` (ready, initial, marked) and `O_k` (moving). Any exit
/// command moves to `O_k`, any detection returns to `R_k`; `C0_k` loops at `R_k`
/// and external events loop at both states.
pub fn build_plant(agent: Agent, p: &PolarPartition) -> Result<Automaton, ModelError> {
    let al = AgentAlphabet::new(agent, p);
    let r = format!("R{}", agent.index());
    let o = format!("O{}", agent.index());
    let mut b = Automaton::builder();
    b.events(al.event_infos()).initial(&r).marked(&r).state(&r).state(&o);
    b.transition(&r, &al.c0, &r);
    for c in &al.commands {
        b.transition(&r, c, &o);
    }
    for d in &al.detections {
        b.transition(&o, d, &r);
    }
    b.self_loops(&r, al.external()).self_loops(&o, al.external());
    Ok(b.build()?)
}

/// Reach/keep specification `A_F_k`, all states marked.
///
/// Outside avoidance: `reach --Cr-_k--> wait`, `wait --d (outer)--> reach`,
/// `wait --d (first ring)--> keep`, and `keep` loops on `C0_k`.
/// When agent `k` stops the other agent it enters `avoid_r`/`avoid_o`, which
/// mirror `reach`/`wait` but allow any exit command; the release of the other
/// agent returns to `reach`/`wait`. All other external events loop everywhere.
pub fn build_formation_spec(agent: Agent, p: &PolarPartition) -> Result<Automaton, ModelError> {
    let al = AgentAlphabet::new(agent, p);
    let stop_other = agent.other().stop_event();
    let release_other = agent.other().release_event();
    let cr_minus = agent.command_event(ControlMode::ExitRMinus);
    let neutral: Vec<&String> = al
        .external()
        .filter(|e| **e != stop_other && **e != release_other)
        .collect();

    let states = ["reach", "wait", "keep", "avoid_r", "avoid_o"];
    let mut b = Automaton::builder();
    b.events(al.event_infos()).states(states).initial("reach");
    for s in states {
        b.marked(s).self_loops(s, neutral.iter().copied());
    }
    b.transition("reach", &cr_minus, "wait")
        .transition("reach", &stop_other, "avoid_r")
        .transition("reach", &release_other, "reach");
    for d in al.outer_detections() {
        b.transition("wait", d, "reach").transition("avoid_o", d, "avoid_r");
    }
    for d in &al.first_circle {
        b.transition("wait", d, "keep").transition("avoid_o", d, "keep");
    }
    b.transition("wait", &stop_other, "avoid_o")
        .transition("wait", &release_other, "wait");
    b.transition("keep", &al.c0, "keep")
        .transition("keep", &stop_other, "keep")
        .transition("keep", &release_other, "keep");
    for c in &al.commands {
        b.transition("avoid_r", c, "avoid_o");
    }
    b.transition("avoid_r", &al.c0, "avoid_r")
        .transition("avoid_r", &release_other, "reach")
        .transition("avoid_o", &release_other, "wait");
    Ok(b.build()?)
}

/// Collision-avoidance specification `A_C` over `E_1 ∪ E_2`, all states marked.
///
/// In `N` both agents command and detect freely. `ca{k}{o}F` or `ca{k}{o}N`
/// leads to `A_k`, where agent `k` must stop the other (`S_k`). Agent `k` then
/// turns with `Ct+_k` (`T_k`) and waits for a detection, repeatedly, until it
/// releases the other agent or reaches the first ring (`K_k`, only `C0_k`).
/// The stopped agent issues no commands; its pending detections, and every
/// alarm, stay enabled throughout.
pub fn build_collision_spec(p: &PolarPartition) -> Result<Automaton, ModelError> {
    let alphabets = [AgentAlphabet::new(Agent::One, p), AgentAlphabet::new(Agent::Two, p)];
    let mut events: Vec<EventInfo> = alphabets[0].event_infos();
    events.extend(
        alphabets[1]
            .event_infos()
            .into_iter()
            .filter(|e| !e.owners.contains(&1)),
    );
    let all_alarms = external_alarms();

    let mut b = Automaton::builder();
    b.events(events).initial("N").marked("N").state("N");
    for al in &alphabets {
        b.self_loops("N", al.commands.iter().chain([&al.c0]).chain(&al.detections));
    }
    for k in Agent::BOTH {
        let al = &alphabets[k.slot()];
        let other = &alphabets[k.other().slot()];
        let n = k.index();
        let (a, s, t, keep) = (format!("A{n}"), format!("S{n}"), format!("T{n}"), format!("K{n}"));
        let release = k.other().release_event();
        for st in [&a, &s, &t, &keep] {
            b.marked(st.as_str())
                .self_loops(st, all_alarms.iter())
                .self_loops(st, other.detections.iter());
        }
        for in_front in [true, false] {
            b.transition("N", k.alarm_event(in_front), &a);
        }
        b.self_loops(&a, al.detections.iter());
        b.transition(&a, k.other().stop_event(), &s);
        b.transition(&s, k.command_event(ControlMode::ExitThetaPlus), &t);
        for d in al.outer_detections() {
            b.transition(&s, d, &s).transition(&t, d, &s);
        }
        for d in &al.first_circle {
            b.transition(&s, d, &keep).transition(&t, d, &keep);
        }
        b.transition(&keep, &al.c0, &keep);
        for st in [&s, &t, &keep] {
            b.transition(st, &release, "N");
        }
    }
    Ok(b.build()?)
}

/// `(A_F1, A_F2, A_C1, A_C2)` where `A_Ck` is the projection of the collision
/// specification onto `E_k`. Fails unless `A_C1 ‖ A_C2 ≅ A_C`.
pub fn build_local_supervisors(p: &PolarPartition) -> Result<(Automaton, Automaton, Automaton, Automaton), ModelError> {
    let ac = build_collision_spec(p)?;
    let e1 = AgentAlphabet::new(Agent::One, p).event_set();
    let e2 = AgentAlphabet::new(Agent::Two, p).event_set();
    let (ac1, ac2) = decompose(&ac, &e1, &e2)?;
    let verdict = is_bisimilar(&ac, &parallel_compose(&ac1, &ac2)?);
    if !verdict.bisimilar {
        let why = verdict.counterexample.map(|c| c.to_string()).unwrap_or_default();
        return Err(ModelError::NotDecomposable(why));
    }
    Ok((
        build_formation_spec(Agent::One, p)?,
        build_formation_spec(Agent::Two, p)?,
        ac1,
        ac2,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> PolarPartition {
        PolarPartition::new(50.0, 6, 9).unwrap()
    }

    #[test]
    fn alphabet_sizes() {
        let al = AgentAlphabet::new(Agent::One, &p());
        assert_eq!(al.detections.len(), 5 * 8);
        assert_eq!(al.first_circle.len(), 8);
        assert_eq!(al.event_set().len(), 4 + 1 + 40 + 8);
        assert_eq!(al.uncontrollable().len(), 44);
    }

    #[test]
    fn release_naming() {
        assert_eq!(Agent::One.release_event(), "R12");
        assert_eq!(Agent::Two.release_event(), "R21");
        assert_eq!(Agent::One.alarm_event(true), "ca12F");
        assert_eq!(classify_event("R21"), Some(EventKind::Release(Agent::Two)));
        assert_eq!(classify_event("d_3_4_2"), Some(EventKind::Detection(Agent::Two, 3, 4)));
        assert_eq!(
            classify_event("Ct+_1"),
            Some(EventKind::Command(Agent::One, ControlMode::ExitThetaPlus))
        );
        assert_eq!(classify_event("bogus"), None);
    }

    #[test]
    fn plant_shape() {
        let a = build_plant(Agent::One, &p()).unwrap();
        assert_eq!(a.num_states(), 2);
        assert_eq!(a.num_transitions(), 4 + 40 + 2 * 8 + 1);
        assert!(a.generates(&["Cr-_1", "d_2_3_1"]));
        assert!(!a.generates(&["Cr-_1", "Cr-_1"]));
        assert!(a.accepts(&[] as &[&str]));
    }

    #[test]
    fn formation_spec_walk() {
        let f = build_formation_spec(Agent::One, &p()).unwrap();
        let w = [
            "Cr-_1", "d_3_2_1", "Cr-_1", "d_2_2_1", "Cr-_1", "d_1_2_1", "C0_1", "C0_1",
        ];
        assert!(f.accepts(&w));
        let q0 = f.initial();
        assert!(!f.is_enabled(q0, f.event_id("Ct+_1").unwrap()));
        assert!(f.is_enabled(q0, f.event_id("Cr-_1").unwrap()));
    }

    #[test]
    fn collision_spec_walks() {
        let c = build_collision_spec(&p()).unwrap();
        assert!(c.accepts(&["ca12F", "Stop2", "Ct+_1", "d_3_4_1", "Ct+_1", "d_3_5_1", "R21"]));
        let after = c.run_from(c.initial(), &["ca12F", "Stop2"]);
        let q = *after.iter().next().unwrap();
        for cmd in ["Cr+_2", "Cr-_2", "Ct+_2", "Ct-_2", "C0_2"] {
            assert!(!c.is_enabled(q, c.event_id(cmd).unwrap()));
        }
        assert!(c.accepts(&["Cr-_1", "Cr-_2"]) && c.accepts(&["Cr-_2", "Cr-_1"]));
    }

    #[test]
    fn local_supervisors_recompose() {
        let p = PolarPartition::new(50.0, 3, 3).unwrap();
        let (_, _, ac1, ac2) = build_local_supervisors(&p).unwrap();
        assert_eq!(ac1.alphabet(), AgentAlphabet::new(Agent::One, &p).event_set());
        assert_eq!(ac2.alphabet(), AgentAlphabet::new(Agent::Two, &p).event_set());
    }
}
